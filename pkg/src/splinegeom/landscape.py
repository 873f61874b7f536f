"""Frozen-pattern probes of the piecewise-quadratic squared loss.

With every sample's activation pattern frozen, the network output is
affine in any single layer's parameters, so the squared loss restricted
to that layer is exactly quadratic: its Hessian is constant and
positive semidefinite on the region where no pattern flips.  Spectra
and condition numbers of these per-layer Hessians quantify how
navigable the local loss basin is, which is where skip connections earn
their keep.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RegionTooSmallError, ShapeError, ValidationError
from .network import (
    ActivationPattern,
    Dataset,
    Network,
    activation_patterns_batch,
    forward_batch,
    hidden_states_batch,
    random_mlp,
    squared_loss,
    with_layer_params,
)

DEFAULT_EIG_CUT = 1e-10


@dataclass(frozen=True, eq=False)
class RegionProbe:
    """A network, a dataset, and the per-sample patterns frozen together."""

    net: Network
    data: Dataset
    patterns: tuple[ActivationPattern, ...]

    @classmethod
    def create(cls, net: Network, data: Dataset) -> "RegionProbe":
        if data.input_dim != net.input_dim or data.label_dim != net.output_dim:
            raise ShapeError("dataset dimensions do not match the network")
        return cls(net=net, data=data, patterns=tuple(activation_patterns_batch(net, data.inputs)))


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    """Eigenvalues (descending) and condition number of one Hessian.

    ``condition_number`` is the largest eigenvalue over the smallest one
    above ``cut`` = tol * largest; ``cut_count`` says how many fell
    below.  ``flat`` flags an (numerically) all-zero Hessian, for which
    the condition number is undefined and reported as None.
    """

    eigenvalues: np.ndarray
    condition_number: float | None
    cut_count: int
    flat: bool
    layer: int | None = None


def _frozen_slopes(probe: RegionProbe) -> list[np.ndarray]:
    """Per-layer activation slopes (n x width) from the frozen patterns."""
    out = []
    for li, layer in enumerate(probe.net.layers):
        bits = np.stack([p.layer_bits[li] for p in probe.patterns])
        out.append(layer.slopes(bits))
    return out


def layer_hessian(probe: RegionProbe, layer: int) -> np.ndarray:
    """Exact loss Hessian over one layer's (W, b), patterns frozen.

    Parameter order is row-major W entries followed by the bias.  Under
    frozen patterns the per-sample output is affine in these parameters
    with coefficient matrix M_i, so H = (2/n) sum_i M_i^T M_i, which is
    PSD by construction.  Batch-norm layers keep their statistics as
    constants and contribute zero rows/columns for the unused bias.
    """
    if not 0 <= layer < probe.net.depth:
        raise ValidationError(f"layer index {layer} out of range")
    net, data = probe.net, probe.data
    n = data.n
    slopes = _frozen_slopes(probe)
    Z = hidden_states_batch(net, data.inputs)[layer]  # n x in_w

    # Downstream frozen Jacobian of the output w.r.t. this layer's
    # pre-activation: start with this layer's slope diagonal, then push
    # through the remaining layers.
    lyr = net.layers[layer]
    w = lyr.width
    P = slopes[layer][:, None, :] * np.broadcast_to(np.eye(w), (n, w, w))
    for m in range(layer + 1, net.depth):
        nxt = net.layers[m]
        W_eff, _ = nxt.effective_affine()
        pre_J = np.matmul(W_eff, P)
        P_new = slopes[m][:, :, None] * pre_J
        if nxt.residual:
            P_new = P_new + P
        P = P_new  # n x C x w

    if lyr.batch_norm is not None:
        P_w = P / lyr.batch_norm.nu[None, None, :]
        M_b = np.zeros_like(P)
    else:
        P_w = P
        M_b = P
    C = net.output_dim
    M_w = np.einsum("nck,nj->nckj", P_w, Z).reshape(n * C, w * lyr.in_width)
    M = np.concatenate([M_w, M_b.reshape(n * C, w)], axis=1)
    return (2.0 / n) * (M.T @ M)


def spectrum(H: np.ndarray, tol: float = DEFAULT_EIG_CUT, layer: int | None = None) -> SpectrumReport:
    """Eigenvalues and condition number of a symmetric PSD matrix.

    The condition number ignores eigenvalues at or below tol times the
    largest (rank-deficient Hessians are routine at small sample
    counts); the report records how many were cut.
    """
    H = np.asarray(H, dtype=np.float64)
    scale = max(np.abs(H).max(initial=0.0), 1.0)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ShapeError("spectrum needs a square matrix")
    if np.abs(H - H.T).max(initial=0.0) > 1e-9 * scale:
        raise ValidationError("matrix is not symmetric within 1e-9")
    eig = np.linalg.eigvalsh((H + H.T) / 2.0)[::-1]
    lam_max = eig[0]
    if lam_max <= 0.0:
        return SpectrumReport(
            eigenvalues=eig, condition_number=None, cut_count=eig.size, flat=True,
            layer=layer,
        )
    cut = tol * lam_max
    retained = eig[eig > cut]
    return SpectrumReport(
        eigenvalues=eig,
        condition_number=float(lam_max / retained[-1]),
        cut_count=int(eig.size - retained.size),
        flat=False,
        layer=layer,
    )


def _patterns_match(net: Network, X: np.ndarray, frozen: tuple[ActivationPattern, ...]) -> bool:
    _, preacts = forward_batch(net, X)
    for li, pre in enumerate(preacts):
        bits = (pre >= 0).astype(np.uint8)
        ref = np.stack([p.layer_bits[li] for p in frozen])
        if not np.array_equal(bits, ref):
            return False
    return True


def quadraticity_check(
    probe: RegionProbe,
    layer: int,
    direction: np.ndarray,
    radius: float,
    auto_shrink: bool = True,
    rel_tol: float = 1e-8,
    max_shrinks: int = 40,
) -> bool:
    """Verify the loss is exactly quadratic along one parameter segment.

    Walks 5 equally spaced points within ±radius of the current
    parameters along ``direction`` (flat vector over row-major W then
    b).  The radius halves until no sample's activation pattern flips
    at any of the points (RegionTooSmallError if that never happens);
    without auto-shrink a flip just returns False.  Passing means the
    three second differences of the loss agree to ``rel_tol``.
    """
    if not 0 <= layer < probe.net.depth:
        raise ValidationError(f"layer index {layer} out of range")
    lyr = probe.net.layers[layer]
    nw = lyr.width * lyr.in_width
    direction = np.asarray(direction, dtype=np.float64)
    if direction.shape != (nw + lyr.width,):
        raise ShapeError(f"direction must have length {nw + lyr.width}")
    dW = direction[:nw].reshape(lyr.width, lyr.in_width)
    db = direction[nw:]

    def perturbed(t: float) -> Network:
        return with_layer_params(
            probe.net, layer, lyr.weight + t * dW, lyr.bias + t * db
        )

    r = float(radius)
    for _ in range(max_shrinks + 1):
        ts = np.linspace(-r, r, 5)
        flips = any(
            not _patterns_match(perturbed(t), probe.data.inputs, probe.patterns)
            for t in ts
        )
        if not flips:
            break
        if not auto_shrink:
            return False
        r /= 2.0
    else:
        raise RegionTooSmallError(
            f"activation patterns flip within every radius down to {r}"
        )

    losses = np.array([squared_loss(perturbed(t), probe.data) for t in ts])
    d2 = losses[:-2] - 2.0 * losses[1:-1] + losses[2:]
    spread = d2.max() - d2.min()
    floor = 64.0 * np.finfo(float).eps * np.abs(losses).max(initial=0.0)
    return bool(spread <= rel_tol * np.abs(d2).max(initial=0.0) + floor)


@dataclass(frozen=True, eq=False)
class ArchitectureComparison:
    """Paired per-seed condition numbers for plain vs residual stacks."""

    seeds: tuple[int, ...]
    plain_kappa: list[list[float | None]]  # per seed, per layer
    residual_kappa: list[list[float | None]]
    plain_per_seed: np.ndarray  # per-seed median over layers
    residual_per_seed: np.ndarray
    plain_median: float
    residual_median: float


def compare_architectures(
    width: int,
    depth: int,
    data: Dataset,
    seeds,
    tol: float = DEFAULT_EIG_CUT,
) -> ArchitectureComparison:
    """Condition numbers of matched plain and residual networks.

    For each seed, a plain stack and a residual stack (same widths,
    identical weight draws, skip branches on the width-preserving
    layers) are probed layer by layer; per-seed scalars are medians over
    layers and the headline numbers are medians over seeds.
    """
    seeds = tuple(int(s) for s in seeds)
    if len(seeds) < 10:
        raise ValidationError("architecture comparison needs at least 10 seeds")
    dims = [data.input_dim] + [width] * (depth - 1) + [data.label_dim]
    plain_all, res_all = [], []
    plain_scalar, res_scalar = [], []
    for seed in seeds:
        row = {}
        for name, residual in (("plain", False), ("residual", True)):
            net = random_mlp(dims, seed=seed, residual=residual)
            probe = RegionProbe.create(net, data)
            kappas = []
            for li in range(net.depth):
                rep = spectrum(layer_hessian(probe, li), tol=tol, layer=li)
                kappas.append(rep.condition_number)
            row[name] = kappas
        plain_all.append(row["plain"])
        res_all.append(row["residual"])
        plain_scalar.append(np.median([k for k in row["plain"] if k is not None]))
        res_scalar.append(np.median([k for k in row["residual"] if k is not None]))
    plain_scalar = np.array(plain_scalar)
    res_scalar = np.array(res_scalar)
    return ArchitectureComparison(
        seeds=seeds,
        plain_kappa=plain_all,
        residual_kappa=res_all,
        plain_per_seed=plain_scalar,
        residual_per_seed=res_scalar,
        plain_median=float(np.median(plain_scalar)),
        residual_median=float(np.median(res_scalar)),
    )
