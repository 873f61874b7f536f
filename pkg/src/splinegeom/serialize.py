"""File formats: network JSON, dataset CSV, slice JSON, reports, manifests.

All structured output goes through one canonical JSON emitter that
prints floats with 17 significant digits (decimal round-trip exact) and
fixed key order, so identical values always serialize to identical
bytes.  Tabular exports use CSV with the same float format.
"""

from __future__ import annotations

import base64
import csv
import hashlib
import io
import json
import os
import time
from pathlib import Path

import numpy as np

from .complexity import DensityGrid
from .errors import ValidationError
from .network import BatchNormState, Dataset, Layer, Network
from .tessellation import Slice, SliceTessellation

FORMAT_VERSION = 1


def format_float(x: float) -> str:
    """Decimal form with 17 significant digits; exact on round-trip."""
    if not np.isfinite(x):
        raise ValidationError("cannot serialize non-finite float")
    return format(float(x), ".17g")


def canonical_json(obj) -> str:
    """Deterministic JSON text: fixed float format, insertion-order keys."""
    out = io.StringIO()
    _emit(obj, out)
    return out.getvalue()


def _emit(obj, out) -> None:
    if obj is None:
        out.write("null")
    elif isinstance(obj, bool):
        out.write("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.write(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.write(format_float(float(obj)))
    elif isinstance(obj, str):
        out.write(json.dumps(obj))
    elif isinstance(obj, np.ndarray):
        _emit(obj.tolist(), out)
    elif isinstance(obj, dict):
        out.write("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.write(",")
            out.write(json.dumps(str(k)))
            out.write(":")
            _emit(v, out)
        out.write("}")
    elif isinstance(obj, (list, tuple)):
        out.write("[")
        for i, v in enumerate(obj):
            if i:
                out.write(",")
            _emit(v, out)
        out.write("]")
    else:
        raise ValidationError(f"cannot serialize object of type {type(obj).__name__}")


def write_text_atomic(path, text: str) -> None:
    """Write via a temp file and rename, so readers never see partials."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_json(path, obj) -> None:
    write_text_atomic(path, canonical_json(obj) + "\n")


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# -- networks ---------------------------------------------------------------


def network_to_dict(net: Network) -> dict:
    layers = []
    for layer in net.layers:
        entry = {
            "weight": layer.weight,
            "bias": layer.bias,
            "activation": layer.activation,
        }
        if layer.activation == "leaky_relu":
            entry["alpha"] = layer.alpha
        entry["residual"] = layer.residual
        if layer.batch_norm is not None:
            entry["batch_norm"] = {
                "mu": layer.batch_norm.mu,
                "nu": layer.batch_norm.nu,
                "epsilon": layer.batch_norm.epsilon,
            }
        layers.append(entry)
    return {"input_dim": net.input_dim, "layers": layers}


def save_network(net: Network, path) -> None:
    write_text_atomic(path, canonical_json(network_to_dict(net)) + "\n")


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValidationError(msg)


def network_from_dict(doc: dict) -> Network:
    _require(isinstance(doc, dict), "network document must be a JSON object")
    _require("input_dim" in doc, "network document missing 'input_dim'")
    _require("layers" in doc and isinstance(doc["layers"], list) and doc["layers"],
             "network document needs a non-empty 'layers' list")
    input_dim = doc["input_dim"]
    _require(isinstance(input_dim, int) and input_dim >= 1,
             "'input_dim' must be a positive integer")
    layers = []
    for i, entry in enumerate(doc["layers"]):
        _require(isinstance(entry, dict), f"layer {i}: must be a JSON object")
        for fieldname in ("weight", "bias", "activation"):
            _require(fieldname in entry, f"layer {i}: missing '{fieldname}'")
        try:
            weight = np.array(entry["weight"], dtype=np.float64)
            bias = np.array(entry["bias"], dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"layer {i}: malformed weight or bias: {exc}") from exc
        _require(weight.ndim == 2, f"layer {i}: weight must be a matrix")
        if bias.shape != (weight.shape[0],):
            raise ValidationError(
                f"layer {i}: bias length {bias.shape[0]} != rows {weight.shape[0]}"
            )
        bn = None
        if entry.get("batch_norm") is not None:
            raw = entry["batch_norm"]
            for fieldname in ("mu", "nu"):
                _require(fieldname in raw, f"layer {i}: batch_norm missing '{fieldname}'")
            try:
                bn = BatchNormState(
                    np.array(raw["mu"], dtype=np.float64),
                    np.array(raw["nu"], dtype=np.float64),
                    float(raw.get("epsilon", BatchNormState.__dataclass_fields__["epsilon"].default)),
                )
            except (ValidationError, ValueError) as exc:
                raise ValidationError(f"layer {i}: invalid batch_norm: {exc}") from exc
        try:
            layers.append(
                Layer(
                    weight=weight,
                    bias=bias,
                    activation=entry["activation"],
                    alpha=float(entry.get("alpha", 0.2)),
                    residual=bool(entry.get("residual", False)),
                    batch_norm=bn,
                )
            )
        except (ValidationError, ValueError) as exc:
            raise ValidationError(f"layer {i}: {exc}") from exc
    try:
        return Network(input_dim, tuple(layers))
    except (ValidationError, ValueError) as exc:
        raise ValidationError(str(exc)) from exc


def load_network(path) -> Network:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON: {exc}") from exc
    return network_from_dict(doc)


# -- datasets ---------------------------------------------------------------


def save_dataset(data: Dataset, path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = [f"x_{j}" for j in range(data.input_dim)] + [
        f"y_{j}" for j in range(data.label_dim)
    ]
    writer.writerow(header)
    for xi, yi in zip(data.inputs, data.labels):
        writer.writerow([format_float(v) for v in xi] + [format_float(v) for v in yi])
    write_text_atomic(path, buf.getvalue())


def load_dataset(path) -> Dataset:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    _require(len(rows) >= 2, f"{path}: dataset needs a header and at least one row")
    header = rows[0]
    xs = [h for h in header if h.startswith("x_")]
    ys = [h for h in header if h.startswith("y_")]
    _require(
        len(xs) + len(ys) == len(header) and xs and ys,
        f"{path}: header must be x_0..x_D-1 followed by y_0..y_C-1",
    )
    try:
        values = np.array([[float(v) for v in row] for row in rows[1:]])
    except ValueError as exc:
        raise ValidationError(f"{path}: non-numeric cell: {exc}") from exc
    _require(values.shape[1] == len(header), f"{path}: ragged rows")
    return Dataset(values[:, : len(xs)], values[:, len(xs) :])


# -- slices -----------------------------------------------------------------


def slice_to_dict(slc: Slice) -> dict:
    return {
        "origin": slc.origin,
        "u": slc.u,
        "v": slc.v,
        "bounds": list(slc.bounds),
    }


def save_slice(slc: Slice, path) -> None:
    write_json(path, slice_to_dict(slc))


def load_slice(path) -> Slice:
    doc = json.loads(Path(path).read_text())
    for fieldname in ("origin", "u", "v"):
        _require(fieldname in doc, f"{path}: slice missing '{fieldname}'")
    bounds = tuple(doc.get("bounds", (0.0, 1.0, 0.0, 1.0)))
    _require(len(bounds) == 4, f"{path}: bounds must be [smin, smax, tmin, tmax]")
    return Slice(np.array(doc["origin"]), np.array(doc["u"]), np.array(doc["v"]), bounds)


# -- tessellations and grids ------------------------------------------------


def _pattern_b64(bits: np.ndarray) -> str:
    if bits.size == 0:
        return ""
    return base64.b64encode(np.packbits(bits).tobytes()).decode("ascii")


def tessellation_to_dict(tess: SliceTessellation) -> dict:
    tiles = [
        {
            "polygon": t.polygon,
            "pattern": [_pattern_b64(b) for b in t.pattern.layer_bits],
            "A2d": t.map2d.A,
            "c": t.map2d.c,
            "area": t.area,
        }
        for t in tess.tiles
    ]
    edges = [
        {
            "tiles": [e.tile_a, e.tile_b],
            "segment": [e.p1, e.p2],
            "layer": e.layer,
            "neuron": e.neuron,
        }
        for e in tess.edges
    ]
    return {
        "format_version": FORMAT_VERSION,
        "slice": slice_to_dict(tess.slice),
        "net_fingerprint": tess.net_fingerprint,
        "tolerances": dict(tess.tolerances),
        "tile_count": tess.tile_count,
        "tiles": tiles,
        "edges": edges,
    }


def density_grid_to_dict(grid: DensityGrid) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "bounds": list(grid.bounds),
        "resolution": list(grid.resolution),
        "counts": grid.counts,
    }


# -- run manifests ----------------------------------------------------------


def build_manifest(command: str, config: dict, input_paths, output_paths, wall_clock: float) -> dict:
    from . import __version__

    return {
        "format_version": FORMAT_VERSION,
        "command": command,
        "config": config,
        "library_version": __version__,
        "inputs": {str(p): sha256_file(p) for p in input_paths},
        "outputs": [str(p) for p in output_paths],
        "wall_clock_seconds": wall_clock,
    }


class ManifestTimer:
    """Collects inputs/outputs of one command run and writes its manifest."""

    def __init__(self, command: str, config: dict):
        self.command = command
        self.config = config
        self.inputs: list[str] = []
        self.outputs: list[str] = []
        self._t0 = time.monotonic()

    def add_input(self, path) -> None:
        self.inputs.append(str(path))

    def add_output(self, path) -> None:
        self.outputs.append(str(path))

    def write(self, path=None) -> None:
        if not self.outputs and path is None:
            return
        target = Path(path) if path is not None else Path(self.outputs[0] + ".manifest.json")
        manifest = build_manifest(
            self.command, self.config, self.inputs, self.outputs,
            time.monotonic() - self._t0,
        )
        write_json(target, manifest)
