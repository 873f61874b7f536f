"""Command-line entry point tying the library into seeded experiments.

Every subcommand validates its inputs, computes, writes its declared
outputs plus a run manifest (config echo, library version, input
hashes, wall clock, output list), and exits 0.  Validation and usage
problems exit 1; capacity and divergence errors exit 2.  Given the same
seed and config, all numeric outputs are byte-identical across runs.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .complexity import LcConfig, dataset_lc, default_lc_radius, hyperplane_density, tls_distance
from .errors import (
    CapacityError,
    DivergenceError,
    SplineGeomError,
)
from .landscape import RegionProbe, compare_architectures, layer_hessian, quadraticity_check, spectrum
from .network import Dataset, random_mlp
from .render import render_density_svg, render_tessellation_svg, write_pgm
from .sampler import LatentDomain, build_pool, polarity_sweep, resample
from .serialize import (
    ManifestTimer,
    canonical_json,
    density_grid_to_dict,
    format_float,
    load_dataset,
    load_network,
    load_slice,
    save_network,
    tessellation_to_dict,
    write_json,
    write_text_atomic,
)
from .tessellation import Slice, decision_boundary, subdivide
from .training import TrainConfig, train_sgd

USAGE_EXIT = 1
CAPACITY_EXIT = 2


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v != ""]


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v != ""]


def _slice_from_args(args, timer) -> Slice:
    if args.slice:
        timer.add_input(args.slice)
        return load_slice(args.slice)
    if not (args.data and args.anchors):
        raise _UsageError("provide either --slice or --data with --anchors i,j,k")
    timer.add_input(args.data)
    data = load_dataset(args.data)
    idx = _ints(args.anchors)
    if len(idx) != 3:
        raise _UsageError("--anchors needs three row indices i,j,k")
    bounds = tuple(_floats(args.bounds))
    if len(bounds) != 4:
        raise _UsageError("--bounds needs smin,smax,tmin,tmax")
    pts = data.inputs[idx]
    return Slice.from_anchors(pts[0], pts[1], pts[2], bounds)


def _add_slice_flags(p):
    p.add_argument("--slice", help="slice JSON file with origin/u/v/bounds")
    p.add_argument("--data", help="dataset CSV for --anchors slice definition")
    p.add_argument("--anchors", help="three dataset row indices i,j,k spanning the plane")
    p.add_argument("--bounds", default="0,1,0,1", help="smin,smax,tmin,tmax in slice coordinates")


def build_parser() -> _Parser:
    parser = _Parser(prog="splinegeom", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("version", help="print the library version")

    p = sub.add_parser("train", help="train a seeded network on a CSV dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--arch", required=True, help="layer widths D,w1,...,C")
    p.add_argument("--activation", default="relu", choices=["relu", "abs", "leaky_relu"])
    p.add_argument("--lr", type=float, required=True)
    p.add_argument("--batch", type=int, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--batch-norm", action="store_true")
    p.add_argument("--bias", default="zero", choices=["zero", "uniform"])
    p.add_argument("--residual", action="store_true")
    p.add_argument("--out", required=True, help="trained network JSON path")
    p.add_argument("--trace", help="optional per-step loss CSV path")

    p = sub.add_parser("tessellate", help="exact tessellation of a 2D slice")
    p.add_argument("--net", required=True)
    _add_slice_flags(p)
    p.add_argument("--json", required=True, help="tessellation JSON output")
    p.add_argument("--svg", help="optional SVG rendering")
    p.add_argument("--color-norm", action="store_true", help="fill tiles by spectral norm")
    p.add_argument("--boundary", help="logit index i or pair i,j to draw in red")
    p.add_argument("--tile-cap", type=int, default=1_000_000)

    p = sub.add_parser("lc", help="local complexity of a dataset under a network")
    p.add_argument("--net", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--radius", type=float, help="ball radius (default: 0.05 x median pairwise distance)")
    p.add_argument("--out", required=True, help="per-point LC CSV output")
    p.add_argument("--tls-layer", type=int, help="also export per-neuron TLS for this layer")
    p.add_argument("--tls-out", help="TLS CSV path (with --tls-layer)")

    p = sub.add_parser("bn-density", help="hyperplane density grid for one layer")
    p.add_argument("--net", required=True)
    _add_slice_flags(p)
    p.add_argument("--layer", type=int, required=True)
    p.add_argument("--resolution", default="64,64", help="nx,ny grid cells")
    p.add_argument("--json", required=True)
    p.add_argument("--svg")
    p.add_argument("--pgm")
    p.add_argument("--tile-cap", type=int, default=1_000_000)

    p = sub.add_parser("sample", help="volume-weighted resampling from a generator")
    p.add_argument("--net", required=True, help="generator network JSON")
    p.add_argument("--rho", type=float, required=True, help="polarity exponent (0.5 = uniform on manifold)")
    p.add_argument("--pool", type=int, required=True, help="proposal pool size")
    p.add_argument("--out", type=int, required=True, help="number of resampled outputs")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--format", default="csv", choices=["csv", "json"])
    p.add_argument("--box", default="-1,1", help="latent box lo,hi (repeated per dim) or lo0,hi0,lo1,hi1,...")
    p.add_argument("--base", default="uniform", choices=["uniform", "normal"])
    p.add_argument("--output", required=True, help="samples file path")
    p.add_argument("--stats", help="optional pool statistics JSON (ESS, weight histogram)")
    p.add_argument("--sweep", help="optional comma-separated rho list for a polarity sweep report")

    p = sub.add_parser("probe-landscape", help="per-layer Hessian spectra and quadraticity")
    p.add_argument("--net")
    p.add_argument("--data", required=True)
    p.add_argument("--layer", type=int, help="restrict the spectrum report to one layer")
    p.add_argument("--seeds", type=int, default=10, help="random probe directions / comparison seeds")
    p.add_argument("--radius", type=float, default=1e-3)
    p.add_argument("--compare", help="width,depth for a plain-vs-residual comparison")
    p.add_argument("--json", required=True, help="report output path")

    return parser


def run_command(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _dispatch(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except (CapacityError, DivergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CAPACITY_EXIT
    except (SplineGeomError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT


def _config_echo(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "command"}


def _dispatch(args) -> int:
    if args.command == "version":
        print(__version__)
        return 0
    timer = ManifestTimer(args.command, _config_echo(args))
    handler = {
        "train": _cmd_train,
        "tessellate": _cmd_tessellate,
        "lc": _cmd_lc,
        "bn-density": _cmd_bn_density,
        "sample": _cmd_sample,
        "probe-landscape": _cmd_probe,
    }[args.command]
    handler(args, timer)
    timer.write()
    return 0


def _cmd_train(args, timer):
    timer.add_input(args.data)
    data = load_dataset(args.data)
    dims = _ints(args.arch)
    net = random_mlp(
        dims,
        seed=args.seed,
        hidden_activation=args.activation,
        bias=args.bias,
        residual=args.residual,
        batch_norm=args.batch_norm,
    )
    cfg = TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch,
        steps=args.steps,
        seed=args.seed,
        batch_norm_enabled=args.batch_norm,
    )
    net, trace = train_sgd(net, data, cfg)
    save_network(net, args.out)
    timer.add_output(args.out)
    if args.trace:
        lines = ["step,loss"] + [
            f"{i},{format_float(v)}" for i, v in enumerate(trace)
        ]
        write_text_atomic(args.trace, "\n".join(lines) + "\n")
        timer.add_output(args.trace)
    print(f"final loss {format_float(trace[-1])}")


def _cmd_tessellate(args, timer):
    timer.add_input(args.net)
    net = load_network(args.net)
    slc = _slice_from_args(args, timer)
    tess = subdivide(net, slc, tile_cap=args.tile_cap)
    write_json(args.json, tessellation_to_dict(tess))
    timer.add_output(args.json)
    boundary = None
    if args.boundary is not None:
        idx = _ints(args.boundary)
        boundary = decision_boundary(tess, idx[0] if len(idx) == 1 else (idx[0], idx[1]))
    if args.svg:
        svg = render_tessellation_svg(tess, color_by_norm=args.color_norm, boundary=boundary)
        write_text_atomic(args.svg, svg)
        timer.add_output(args.svg)
    print(f"{tess.tile_count} tiles, {len(tess.edges)} edges")


def _cmd_lc(args, timer):
    timer.add_input(args.net)
    timer.add_input(args.data)
    net = load_network(args.net)
    data = load_dataset(args.data)
    radius = args.radius if args.radius is not None else default_lc_radius(data)
    mean, per_point = dataset_lc(net, data, LcConfig(radius))
    lines = ["index,lc"] + [f"{i},{int(v)}" for i, v in enumerate(per_point)]
    write_text_atomic(args.out, "\n".join(lines) + "\n")
    timer.add_output(args.out)
    if args.tls_layer is not None:
        if not args.tls_out:
            raise _UsageError("--tls-layer needs --tls-out")
        tls = tls_distance(net, data, args.tls_layer)
        lines = ["neuron,tls"] + [
            f"{k},{format_float(v) if np.isfinite(v) else 'inf'}"
            for k, v in enumerate(tls)
        ]
        write_text_atomic(args.tls_out, "\n".join(lines) + "\n")
        timer.add_output(args.tls_out)
    print(f"mean LC {format_float(mean)} at radius {format_float(radius)}")


def _cmd_bn_density(args, timer):
    timer.add_input(args.net)
    net = load_network(args.net)
    slc = _slice_from_args(args, timer)
    resolution = _ints(args.resolution)
    grid = hyperplane_density(net, slc, args.layer, (resolution[0], resolution[1]),
                              tile_cap=args.tile_cap)
    write_json(args.json, density_grid_to_dict(grid))
    timer.add_output(args.json)
    if args.svg:
        write_text_atomic(args.svg, render_density_svg(grid))
        timer.add_output(args.svg)
    if args.pgm:
        write_pgm(grid, args.pgm)
        timer.add_output(args.pgm)
    print(f"total crossings {int(grid.counts.sum())}")


def _latent_domain(args, dim: int) -> LatentDomain:
    vals = _floats(args.box)
    if len(vals) == 2:
        box = np.tile(np.array(vals), (dim, 1))
    elif len(vals) == 2 * dim:
        box = np.array(vals).reshape(dim, 2)
    else:
        raise _UsageError("--box needs lo,hi or one lo,hi pair per latent dimension")
    return LatentDomain(dim=dim, box=box, base=args.base)


def _cmd_sample(args, timer):
    timer.add_input(args.net)
    gen = load_network(args.net)
    domain = _latent_domain(args, gen.input_dim)
    pool = build_pool(gen, domain, args.pool, args.rho, args.seed)
    latents, outputs = resample(pool, args.out, seed=args.seed)
    if args.format == "csv":
        header = [f"z_{j}" for j in range(gen.input_dim)] + [
            f"g_{j}" for j in range(gen.output_dim)
        ]
        lines = [",".join(header)]
        for z, g in zip(latents, outputs):
            lines.append(",".join(format_float(v) for v in list(z) + list(g)))
        write_text_atomic(args.output, "\n".join(lines) + "\n")
    else:
        write_json(args.output, {"latents": latents, "outputs": outputs})
    timer.add_output(args.output)
    if args.stats:
        hist, edges = np.histogram(pool.weights, bins=20)
        stats = {
            "format_version": 1,
            "rho": args.rho,
            "pool_size": pool.size,
            "ess": pool.ess,
            "mean_volume": float(np.mean(pool.volumes)),
            "weight_hist": {"counts": hist, "bin_edges": edges},
        }
        if args.sweep:
            sweep = polarity_sweep(gen, domain, _floats(args.sweep), args.pool,
                                   args.seed, n_out=args.out)
            stats["sweep"] = [
                {
                    "rho": p.rho,
                    "ess": p.ess,
                    "mean_volume_weighted": p.mean_volume_weighted,
                    "mean_volume_resampled": p.mean_volume_resampled,
                }
                for p in sweep
            ]
        write_json(args.stats, stats)
        timer.add_output(args.stats)
    print(f"ESS {format_float(pool.ess)} of pool {pool.size}")


def _spectrum_dict(rep) -> dict:
    return {
        "layer": rep.layer,
        "eigenvalues": rep.eigenvalues,
        "condition_number": rep.condition_number,
        "cut_count": rep.cut_count,
        "flat": rep.flat,
    }


def _cmd_probe(args, timer):
    timer.add_input(args.data)
    data = load_dataset(args.data)
    report = {"format_version": 1}
    if args.compare:
        width, depth = _ints(args.compare)
        cmp = compare_architectures(width, depth, data, seeds=range(args.seeds))
        report["compare"] = {
            "width": width,
            "depth": depth,
            "seeds": list(cmp.seeds),
            "plain_kappa": cmp.plain_kappa,
            "residual_kappa": cmp.residual_kappa,
            "plain_median": cmp.plain_median,
            "residual_median": cmp.residual_median,
        }
    else:
        if not args.net:
            raise _UsageError("probe-landscape needs --net unless --compare is given")
        timer.add_input(args.net)
        net = load_network(args.net)
        probe = RegionProbe.create(net, data)
        layers = [args.layer] if args.layer is not None else list(range(net.depth))
        spectra = []
        quad = []
        for li in layers:
            H = layer_hessian(probe, li)
            spectra.append(_spectrum_dict(spectrum(H, layer=li)))
            rng = np.random.default_rng([args.seeds, li])
            for j in range(args.seeds):
                lyr = net.layers[li]
                direction = rng.standard_normal(lyr.width * lyr.in_width + lyr.width)
                ok = quadraticity_check(probe, li, direction, args.radius)
                quad.append({"layer": li, "direction_seed": j, "passed": bool(ok)})
        report["spectra"] = spectra
        report["quadraticity"] = quad
    write_json(args.json, report)
    timer.add_output(args.json)
    print(f"report written to {args.json}")


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
