"""Local complexity, hyperplane alignment, and density measurements.

Local complexity (LC) proxies the number of tiles near a point by the
number of neuron hyperplanes crossing a Euclidean ball around it, using
the frozen-pattern linearization at the point: each neuron's boundary
is locally the hyperplane ``pre_k(x) = 0`` of the tile's affine map.
Only folding activations create hyperplanes, so identity-activation
neurons never count.

TLS distances measure how well a layer's hyperplanes hug the data: the
mean squared orthogonal distance from each neuron's hyperplane to the
layer's input representation of the dataset.  Batch normalization
minimizes this offset term by construction, which is the geometric
story behind its initialization behavior.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .errors import ShapeError, ValidationError
from .network import Dataset, Network, frozen_affine_batch, hidden_states_batch
from .tessellation import Slice, edge_density_grid, subdivide

BOUNDARY_NUDGE = 1e-9


@dataclass(frozen=True)
class LcConfig:
    """Neighborhood scale for local complexity: a Euclidean ball of radius r."""

    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValidationError("LC radius must be positive")


@dataclass(frozen=True, eq=False)
class DensityGrid:
    """Hyperplane-segment crossing counts per cell of a slice grid."""

    bounds: tuple[float, float, float, float]
    resolution: tuple[int, int]
    counts: np.ndarray  # ny x nx

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (self.resolution[1], self.resolution[0]):
            raise ShapeError("counts shape must be (ny, nx)")
        if np.any(counts < 0):
            raise ValidationError("density counts must be non-negative")
        object.__setattr__(self, "counts", counts)


def _distance_matrix(net: Network, X: np.ndarray) -> np.ndarray:
    """Per-point distances to every neuron hyperplane, layers concatenated.

    Distance is |pre| / ||grad pre|| under the frozen pattern at each
    point; neurons with zero effective gradient sit at +inf.
    """
    trace = frozen_affine_batch(net, X)
    cols = []
    for pre, jac in zip(trace.preacts, trace.pre_jacobians):
        norms = np.linalg.norm(jac, axis=2)
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.abs(pre) / norms
        d[norms == 0.0] = np.inf
        d[(norms == 0.0) & (pre == 0.0)] = np.inf
        cols.append(d)
    return np.concatenate(cols, axis=1)


def neuron_distances(net: Network, x: np.ndarray) -> list[tuple[int, int, float]]:
    """(layer, neuron, distance-to-hyperplane) for every neuron at ``x``."""
    x = np.asarray(x, dtype=np.float64)
    dists = _distance_matrix(net, x[None, :])[0]
    out = []
    pos = 0
    for li, w in enumerate(net.widths):
        for k in range(w):
            out.append((li, k, float(dists[pos + k])))
        pos += w
    return out


def _folding_columns(net: Network) -> np.ndarray:
    mask = np.zeros(sum(net.widths), dtype=bool)
    pos = 0
    for layer in net.layers:
        if layer.folds:
            mask[pos : pos + layer.width] = True
        pos += layer.width
    return mask


def local_complexity(net: Network, x: np.ndarray, cfg: LcConfig) -> int:
    """Number of hyperplanes strictly closer than the ball radius.

    Counts folding-activation neurons only; the frozen linearization is
    used even when hyperplanes fold inside the ball (choosing a radius
    small enough is the caller's job).
    """
    x = np.asarray(x, dtype=np.float64)
    dists = _distance_matrix(net, x[None, :])[0][_folding_columns(net)]
    return int(np.count_nonzero(dists < cfg.radius))


def default_lc_radius(data: Dataset) -> float:
    """0.05 times the median pairwise distance between data points."""
    if data.n < 2:
        raise ValidationError("default LC radius needs at least two points")
    return 0.05 * float(np.median(pdist(data.inputs)))


def dataset_lc(
    net: Network, data: Dataset, cfg: LcConfig | None = None
) -> tuple[float, np.ndarray]:
    """Mean and per-point local complexity over a dataset.

    Points sitting exactly on a hyperplane are nudged by 1e-9 before
    evaluation.  With no config, the radius defaults to 0.05 times the
    median pairwise data distance.
    """
    if data.input_dim != net.input_dim:
        raise ShapeError("dataset dimension does not match the network")
    if cfg is None:
        cfg = LcConfig(default_lc_radius(data))
    X = np.array(data.inputs)
    trace = frozen_affine_batch(net, X)
    on_boundary = np.zeros(data.n, dtype=bool)
    for pre in trace.preacts:
        on_boundary |= np.any(pre == 0.0, axis=1)
    if np.any(on_boundary):
        X[on_boundary] += BOUNDARY_NUDGE
    dists = _distance_matrix(net, X)[:, _folding_columns(net)]
    per_point = np.count_nonzero(dists < cfg.radius, axis=1)
    return float(per_point.mean()), per_point


def tls_distance(net: Network, data: Dataset, layer: int) -> np.ndarray:
    """Mean squared orthogonal distance from each neuron's hyperplane.

    Distances are measured at the layer's input representation of the
    data.  Zero-weight neurons have no hyperplane and report +inf.
    """
    if not 0 <= layer < net.depth:
        raise ValidationError(f"layer index {layer} out of range")
    if data.input_dim != net.input_dim:
        raise ShapeError("dataset dimension does not match the network")
    Z = hidden_states_batch(net, data.inputs)[layer]
    W_eff, b_eff = net.layers[layer].effective_affine()
    norms = np.linalg.norm(W_eff, axis=1)
    signed = Z @ W_eff.T + b_eff
    out = np.empty(net.layers[layer].width)
    for k in range(out.size):
        if norms[k] == 0.0:
            warnings.warn(f"layer {layer} neuron {k} has a zero weight row")
            out[k] = math.inf
        else:
            out[k] = float(np.mean((signed[:, k] / norms[k]) ** 2))
    return out


def mean_signed_distance(net: Network, data: Dataset, layer: int) -> np.ndarray:
    """Batch-mean signed distance per neuron (0 right after a BN update)."""
    Z = hidden_states_batch(net, data.inputs)[layer]
    W_eff, b_eff = net.layers[layer].effective_affine()
    norms = np.linalg.norm(W_eff, axis=1)
    signed = Z @ W_eff.T + b_eff
    with np.errstate(divide="ignore", invalid="ignore"):
        md = signed.mean(axis=0) / norms
    md[norms == 0.0] = np.inf
    return md


def hyperplane_density(
    net: Network,
    slc: Slice,
    layer: int,
    resolution: tuple[int, int],
    tile_cap: int = 1_000_000,
) -> DensityGrid:
    """Per-cell count of layer-``layer`` hyperplane segments on a slice.

    Subdivides the slice with layers up to and including ``layer`` and
    counts, for each grid cell, the tessellation edges contributed by
    that layer's neurons (folded by all earlier layers).
    """
    if not 0 <= layer < net.depth:
        raise ValidationError(f"layer index {layer} out of range")
    tess = subdivide(net.truncated(layer + 1), slc, tile_cap=tile_cap)
    segs = [e for e in tess.edges if e.layer == layer]
    counts = edge_density_grid(segs, slc.bounds, resolution)
    return DensityGrid(bounds=slc.bounds, resolution=tuple(resolution), counts=counts)
