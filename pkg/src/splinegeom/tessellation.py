"""Exact tessellation of a bounded 2D slice of a network's input space.

The network restricted to a plane ``embed(s, t) = origin + s*u + t*v``
is still piecewise affine.  Starting from the bounding rectangle as a
single tile, each layer's neurons contribute lines (the restriction of
their zero-level hyperplanes to the slice, already folded by earlier
layers); splitting every tile by every crossing line and freezing the
resulting on/off bit reproduces the network's tile structure exactly.

Tiles carry their activation pattern and the exact affine map from
slice coordinates to the network output, so decision boundaries and
per-tile slopes come for free.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, RangeError, ShapeError, ValidationError
from .geometry import (
    EPS_AREA,
    clip_line_to_polygon,
    point_in_polygon,
    polygon_area,
    polygon_centroid,
    polygon_diameter,
    rect_polygon,
    segment_intersects_rect,
    split_polygon_by_line,
)
from .network import (
    ActivationPattern,
    AffineMap,
    Network,
    activation_pattern,
)

DEFAULT_TILE_CAP = 1_000_000

# Edge-matching tolerance (relative to the bounds diameter) used when
# pairing collinear polygon edges into shared tessellation edges.
EDGE_MATCH_REL = 1e-9


@dataclass(frozen=True, eq=False)
class Slice:
    """A bounded plane in input space: ``embed(s, t) = origin + s u + t v``."""

    origin: np.ndarray
    u: np.ndarray
    v: np.ndarray
    bounds: tuple[float, float, float, float] = (0.0, 1.0, 0.0, 1.0)

    def __post_init__(self):
        o = np.asarray(self.origin, dtype=np.float64)
        u = np.asarray(self.u, dtype=np.float64)
        v = np.asarray(self.v, dtype=np.float64)
        for name, vec in (("origin", o), ("u", u), ("v", v)):
            if vec.ndim != 1 or not np.all(np.isfinite(vec)):
                raise ValidationError(f"slice {name} must be a finite vector")
        if not o.shape == u.shape == v.shape:
            raise ShapeError("slice origin, u, v must share one dimension")
        gram = np.array([[u @ u, u @ v], [u @ v, v @ v]])
        if np.linalg.det(gram) <= 1e-24 * max(u @ u, 1e-300) * max(v @ v, 1e-300):
            raise ValidationError("slice directions u, v must be linearly independent")
        smin, smax, tmin, tmax = (float(b) for b in self.bounds)
        if not (smax > smin and tmax > tmin):
            raise ValidationError("slice bounds must be a non-degenerate rectangle")
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "bounds", (smin, smax, tmin, tmax))

    @classmethod
    def from_anchors(cls, p0, p1, p2, bounds=(0.0, 1.0, 0.0, 1.0)) -> "Slice":
        """Plane through three anchor points: p0 + s (p1 - p0) + t (p2 - p0)."""
        p0 = np.asarray(p0, dtype=np.float64)
        return cls(p0, np.asarray(p1) - p0, np.asarray(p2) - p0, bounds)

    @property
    def dim(self) -> int:
        return self.origin.shape[0]

    @property
    def basis(self) -> np.ndarray:
        """D x 2 matrix whose columns are u and v."""
        return np.stack([self.u, self.v], axis=1)

    def embed(self, points: np.ndarray) -> np.ndarray:
        """Map (k, 2) slice coordinates to (k, D) input-space points."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return self.origin[None, :] + pts @ self.basis.T

    def embed_point(self, point) -> np.ndarray:
        return self.embed(np.asarray(point, dtype=np.float64)[None, :])[0]


@dataclass(frozen=True, eq=False)
class Tile:
    """One convex cell of the tessellation.

    ``pattern`` stores the on/off bits of every folding layer (identity
    layers bend nothing, so they contribute empty bit vectors), and
    ``map2d`` is the exact affine map from slice coordinates to the
    network output on this cell.
    """

    polygon: np.ndarray
    pattern: ActivationPattern
    map2d: AffineMap
    area: float


@dataclass(frozen=True, eq=False)
class Edge:
    """A maximal straight piece of shared tile boundary.

    ``tile_b`` is None for segments on the bounding rectangle.  For
    interior edges, ``layer``/``neuron`` name the neuron whose
    hyperplane separates the two tiles (the single differing pattern
    bit in the generic case).
    """

    tile_a: int
    tile_b: int | None
    p1: np.ndarray
    p2: np.ndarray
    layer: int | None
    neuron: int | None


def region_key(net: Network, layer_bits) -> bytes:
    """Byte key over folding-layer bits only; identity layers carry none."""
    parts = []
    for layer, bits in zip(net.layers, layer_bits):
        if layer.folds:
            parts.append(np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes())
    return b"|".join(parts)


@dataclass(frozen=True, eq=False)
class SliceTessellation:
    """The full face structure of one subdivided slice."""

    net: Network
    slice: Slice
    tiles: tuple[Tile, ...]
    edges: tuple[Edge, ...]
    net_fingerprint: str
    tolerances: dict
    _by_key: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        index = {
            region_key(self.net, t.pattern.layer_bits): i
            for i, t in enumerate(self.tiles)
        }
        object.__setattr__(self, "_by_key", index)

    @property
    def tile_count(self) -> int:
        return len(self.tiles)

    def tile_by_pattern(self, pattern: ActivationPattern) -> Tile | None:
        idx = self._by_key.get(region_key(self.net, pattern.layer_bits))
        return None if idx is None else self.tiles[idx]


def network_fingerprint(net: Network) -> str:
    """Structural SHA-256 of a network's architecture and parameters."""
    h = hashlib.sha256()
    h.update(f"D={net.input_dim}".encode())
    for layer in net.layers:
        h.update(
            f"|{layer.activation},{layer.alpha},{int(layer.residual)}".encode()
        )
        h.update(np.ascontiguousarray(layer.weight).tobytes())
        h.update(np.ascontiguousarray(layer.bias).tobytes())
        if layer.batch_norm is not None:
            h.update(np.ascontiguousarray(layer.batch_norm.mu).tobytes())
            h.update(np.ascontiguousarray(layer.batch_norm.nu).tobytes())
    return h.hexdigest()


def subdivide(
    net: Network,
    slc: Slice,
    tile_cap: int = DEFAULT_TILE_CAP,
    eps_area: float = EPS_AREA,
) -> SliceTessellation:
    """Layer-by-layer exact subdivision of the slice bounding rectangle.

    Every tile tracks the affine map from (s, t) to the current layer's
    input; each layer's neurons become lines in slice coordinates that
    cut the tiles, and each cut fixes one pattern bit.  Raises
    CapacityError when the running tile count exceeds ``tile_cap``.
    """
    if slc.dim != net.input_dim:
        raise ShapeError("slice dimension does not match network input")
    root = rect_polygon(slc.bounds)
    # Per tile: (polygon, A from (s,t) to layer input, offset, bits so far).
    work = [(root, slc.basis.copy(), slc.origin.copy(), [])]
    for li, layer in enumerate(net.layers):
        W_eff, b_eff = layer.effective_affine()
        next_work = []
        for poly, A_acc, c_acc, bits in work:
            line_A = W_eff @ A_acc  # width x 2
            line_c = W_eff @ c_acc + b_eff
            if layer.folds:
                fragments = _split_tile(poly, line_A, line_c, eps_area)
            else:
                fragments = [(poly, np.empty(0, dtype=np.uint8))]
            for fpoly, fbits in fragments:
                slope = layer.slopes(fbits) if layer.folds else np.ones(layer.width)
                A_new = slope[:, None] * line_A
                c_new = slope * line_c
                if layer.residual:
                    A_new = A_new + A_acc
                    c_new = c_new + c_acc
                next_work.append((fpoly, A_new, c_new, bits + [fbits]))
            if len(next_work) > tile_cap:
                raise CapacityError(
                    f"tile cap {tile_cap} exceeded while splitting layer {li}",
                    tile_count=len(next_work),
                    layer=li,
                )
        work = next_work

    tiles = [
        Tile(
            polygon=poly,
            pattern=ActivationPattern(tuple(bits)),
            map2d=AffineMap(A_acc, c_acc),
            area=polygon_area(poly),
        )
        for poly, A_acc, c_acc, bits in work
    ]
    tiles.sort(key=lambda t: region_key(net, t.pattern.layer_bits))
    edges = _extract_edges(net, tiles, slc.bounds)
    return SliceTessellation(
        net=net,
        slice=slc,
        tiles=tuple(tiles),
        edges=tuple(edges),
        net_fingerprint=network_fingerprint(net),
        tolerances={"eps_area": eps_area, "edge_match_rel": EDGE_MATCH_REL},
    )


def _split_tile(poly, line_A, line_c, eps_area):
    """Split one polygon by one layer's neuron lines, in neuron order.

    Returns (fragment polygon, per-neuron bit vector) pairs.  Lines that
    do not cross the polygon only fix a bit; degenerate lines (zero
    in-slice gradient) take the sign of their constant pre-activation.
    """
    width = line_A.shape[0]
    norms = np.hypot(line_A[:, 0], line_A[:, 1])
    values = poly @ line_A.T + line_c  # nv x width
    snap = 1e-12 * polygon_diameter(poly) * np.maximum(norms, 1e-300)
    vmin, vmax = values.min(axis=0), values.max(axis=0)

    fixed_bits = np.zeros(width, dtype=np.uint8)
    crossing = []
    for k in range(width):
        if norms[k] == 0.0:
            fixed_bits[k] = 1 if line_c[k] >= 0.0 else 0
        elif vmin[k] >= -snap[k]:
            fixed_bits[k] = 1
        elif vmax[k] <= snap[k]:
            fixed_bits[k] = 0
        else:
            crossing.append(k)

    fragments = [(poly, {})]
    for k in crossing:
        line = (line_A[k, 0], line_A[k, 1], line_c[k])
        updated = []
        for fpoly, fbits in fragments:
            neg, pos = split_polygon_by_line(fpoly, line, eps_area)
            if neg is not None:
                updated.append((neg, {**fbits, k: 0}))
            if pos is not None:
                updated.append((pos, {**fbits, k: 1}))
        fragments = updated

    out = []
    for fpoly, fbits in fragments:
        bits = fixed_bits.copy()
        for k, bit in fbits.items():
            bits[k] = bit
        out.append((fpoly, bits))
    return out


def _canonical_line(p1: np.ndarray, p2: np.ndarray):
    """Unit normal and offset of the line through two points, sign-fixed."""
    d = p2 - p1
    length = np.hypot(d[0], d[1])
    n = np.array([-d[1], d[0]]) / length
    if n[0] < 0.0 or (n[0] == 0.0 and n[1] < 0.0):
        n = -n
    return n, float(n @ p1)


def _extract_edges(net, tiles, bounds):
    """Pair collinear polygon edges of opposite orientation into edges.

    Tile polygons meet with hanging vertices (a neighbor may subdivide
    the common line differently), so edges are recovered by grouping
    all polygon edges by their supporting line and intersecting the
    parameter intervals of segments facing each other.
    """
    diam = np.hypot(bounds[1] - bounds[0], bounds[3] - bounds[2])
    tol = EDGE_MATCH_REL * diam
    quantum = max(tol, 1e-300)

    groups: dict[tuple, list] = {}
    keys_seen: dict[tuple, tuple] = {}
    for ti, tile in enumerate(tiles):
        poly = tile.polygon
        n = poly.shape[0]
        for i in range(n):
            p1, p2 = poly[i], poly[(i + 1) % n]
            if np.hypot(*(p2 - p1)) <= tol:
                continue
            normal, offset = _canonical_line(p1, p2)
            raw = (
                round(normal[0] / 1e-9),
                round(normal[1] / 1e-9),
                round(offset / quantum),
            )
            key = None
            for dx in (0, -1, 1):
                for dy in (0, -1, 1):
                    for do in (0, -1, 1):
                        probe = (raw[0] + dx, raw[1] + dy, raw[2] + do)
                        if probe in keys_seen:
                            key = keys_seen[probe]
                            break
                    if key is not None:
                        break
                if key is not None:
                    break
            if key is None:
                key = raw
            keys_seen[raw] = key
            direction = np.array([-normal[1], normal[0]])
            t1, t2 = float(p1 @ direction), float(p2 @ direction)
            # CCW polygon: interior lies left of p1->p2; left of the
            # direction used here is +normal iff t1 < t2.
            side = 1 if t1 < t2 else -1
            groups.setdefault(key, []).append(
                (ti, min(t1, t2), max(t1, t2), side, normal, offset)
            )

    boundary_lines = [
        (np.array([1.0, 0.0]), bounds[0]),
        (np.array([1.0, 0.0]), bounds[1]),
        (np.array([0.0, 1.0]), bounds[2]),
        (np.array([0.0, 1.0]), bounds[3]),
    ]

    edges = []
    for entries in groups.values():
        normal, offset = entries[0][4], entries[0][5]
        on_bounds = any(
            np.hypot(*(normal - bn)) <= 1e-9 and abs(offset - bo) <= tol
            for bn, bo in boundary_lines
        )
        direction = np.array([-normal[1], normal[0]])
        base = normal * offset
        if on_bounds:
            for ti, lo, hi, _side, _n, _o in entries:
                edges.append(
                    Edge(
                        tile_a=ti,
                        tile_b=None,
                        p1=base + lo * direction,
                        p2=base + hi * direction,
                        layer=None,
                        neuron=None,
                    )
                )
            continue
        plus = [e for e in entries if e[3] == 1]
        minus = [e for e in entries if e[3] == -1]
        for ti, lo_i, hi_i, _s, _n, _o in plus:
            for tj, lo_j, hi_j, _s2, _n2, _o2 in minus:
                lo, hi = max(lo_i, lo_j), min(hi_i, hi_j)
                if hi - lo <= tol:
                    continue
                layer, neuron = _separating_bit(net, tiles[ti], tiles[tj])
                edges.append(
                    Edge(
                        tile_a=min(ti, tj),
                        tile_b=max(ti, tj),
                        p1=base + lo * direction,
                        p2=base + hi * direction,
                        layer=layer,
                        neuron=neuron,
                    )
                )
    edges.sort(key=lambda e: (e.tile_a, -1 if e.tile_b is None else e.tile_b, e.p1[0], e.p1[1]))
    return edges


def _separating_bit(net, tile_a, tile_b):
    """First (layer, neuron) whose bit differs between two adjacent tiles."""
    for li, (ba, bb) in enumerate(
        zip(tile_a.pattern.layer_bits, tile_b.pattern.layer_bits)
    ):
        if ba.size and not np.array_equal(ba, bb):
            k = int(np.nonzero(ba != bb)[0][0])
            return li, k
    return None, None


def locate_tile(tess: SliceTessellation, point) -> Tile:
    """Tile whose closed polygon contains a slice-coordinate point.

    Interior points resolve through their activation pattern; points on
    an edge land on the tile matching the >= 0 tie rule when that tile
    exists inside the bounds, otherwise on any containing tile.
    """
    pt = np.asarray(point, dtype=np.float64)
    smin, smax, tmin, tmax = tess.slice.bounds
    pad = 1e-12 * max(smax - smin, tmax - tmin)
    if not (smin - pad <= pt[0] <= smax + pad and tmin - pad <= pt[1] <= tmax + pad):
        raise RangeError(f"point {pt.tolist()} lies outside the slice bounds")
    pattern = activation_pattern(tess.net, tess.slice.embed_point(pt))
    tile = tess.tile_by_pattern(pattern)
    if tile is not None:
        return tile
    tol = 1e-9 * max(smax - smin, tmax - tmin)
    for tile in tess.tiles:
        if point_in_polygon(tile.polygon, pt, tol):
            return tile
    raise RangeError(f"no tile contains point {pt.tolist()}")


@dataclass(frozen=True, eq=False)
class BoundarySegment:
    tile: int
    p1: np.ndarray
    p2: np.ndarray


@dataclass(frozen=True, eq=False)
class DecisionBoundary:
    """Per-tile zero-set segments of one logit (or logit difference).

    ``degenerate_tiles`` lists tiles where the selected output is
    identically zero, i.e. the whole cell sits on the boundary.
    """

    segments: tuple[BoundarySegment, ...]
    degenerate_tiles: tuple[int, ...]


def decision_boundary(tess: SliceTessellation, logit) -> DecisionBoundary:
    """Zero set of an output coordinate (or difference of two) per tile.

    ``logit`` is either one output index (boundary where it crosses 0,
    the signed-logit convention) or a pair (i, j) for the set where
    outputs i and j agree.  Segments of adjacent tiles share endpoints
    because the map is continuous across tile edges.
    """
    C = tess.net.output_dim
    if isinstance(logit, (tuple, list)):
        i, j = (int(v) for v in logit)
        if not (0 <= i < C and 0 <= j < C):
            raise ValidationError(f"logit indices {logit} out of range for C={C}")
    else:
        i, j = int(logit), None
        if not 0 <= i < C:
            raise ValidationError(f"logit index {logit} out of range for C={C}")

    segments = []
    degenerate = []
    for ti, tile in enumerate(tess.tiles):
        A, c = tile.map2d.A, tile.map2d.c
        if j is None:
            ga, gc = A[i], float(c[i])
        else:
            ga, gc = A[i] - A[j], float(c[i] - c[j])
        scale = max(
            np.abs(A).max(initial=0.0), np.abs(c).max(initial=0.0), 1e-300
        )
        if np.hypot(ga[0], ga[1]) <= 1e-14 * scale:
            if abs(gc) <= 1e-14 * scale:
                degenerate.append(ti)
            continue
        chord = clip_line_to_polygon(tile.polygon, (ga[0], ga[1], gc))
        if chord is not None:
            segments.append(BoundarySegment(tile=ti, p1=chord[0], p2=chord[1]))
    return DecisionBoundary(segments=tuple(segments), degenerate_tiles=tuple(degenerate))


@dataclass(frozen=True, eq=False)
class TessellationStats:
    """Summary statistics of a slice tessellation."""

    tile_count: int
    areas: np.ndarray
    area_hist_counts: np.ndarray
    area_hist_edges: np.ndarray
    spectral_norms: np.ndarray
    edge_density: np.ndarray  # ny x nx counts of edges touching each cell
    density_resolution: tuple[int, int]


def tessellation_stats(
    tess: SliceTessellation,
    density_resolution: tuple[int, int] = (32, 32),
    hist_bins: int = 10,
) -> TessellationStats:
    """Tile counts, area histogram, per-tile spectral norms, edge density.

    The spectral norm is the largest singular value of each tile's
    slice-restricted linear part (the 2-norm of the local slope).
    """
    areas = np.array([t.area for t in tess.tiles])
    counts, edges = np.histogram(areas, bins=hist_bins)
    stacked = np.stack([t.map2d.A for t in tess.tiles])
    norms = np.linalg.svd(stacked, compute_uv=False)[:, 0]
    interior = [e for e in tess.edges if e.tile_b is not None]
    density = edge_density_grid(interior, tess.slice.bounds, density_resolution)
    return TessellationStats(
        tile_count=tess.tile_count,
        areas=areas,
        area_hist_counts=counts,
        area_hist_edges=edges,
        spectral_norms=norms,
        edge_density=density,
        density_resolution=density_resolution,
    )


def edge_density_grid(edges, bounds, resolution):
    """Count, per grid cell, the segments whose span touches the cell."""
    nx, ny = int(resolution[0]), int(resolution[1])
    if nx < 1 or ny < 1:
        raise ValidationError("density resolution must be positive")
    smin, smax, tmin, tmax = bounds
    xs = np.linspace(smin, smax, nx + 1)
    ys = np.linspace(tmin, tmax, ny + 1)
    counts = np.zeros((ny, nx), dtype=np.int64)
    for e in edges:
        p1, p2 = e.p1, e.p2
        # Conservative cell window (the exact test below filters); a
        # segment on a cell rim belongs to both neighboring cells.
        lo_x = np.searchsorted(xs, min(p1[0], p2[0]), side="left") - 1
        hi_x = np.searchsorted(xs, max(p1[0], p2[0]), side="right")
        lo_y = np.searchsorted(ys, min(p1[1], p2[1]), side="left") - 1
        hi_y = np.searchsorted(ys, max(p1[1], p2[1]), side="right")
        for iy in range(max(lo_y, 0), min(hi_y, ny - 1) + 1):
            for ix in range(max(lo_x, 0), min(hi_x, nx - 1) + 1):
                cell = (xs[ix], xs[ix + 1], ys[iy], ys[iy + 1])
                if segment_intersects_rect(p1, p2, cell):
                    counts[iy, ix] += 1
    return counts
