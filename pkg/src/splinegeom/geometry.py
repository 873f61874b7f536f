"""Convex polygon kernel used by the slice subdivision.

Polygons are (k, 2) float arrays of counterclockwise vertices; lines are
triples ``(a, b, c)`` representing ``a*s + b*t + c = 0``.  All routines
are pure and tolerant of vertices that lie numerically on a cutting
line: such vertices snap to the line and belong to both closed sides.
"""

from __future__ import annotations

import numpy as np

from .errors import GeometryError

# A clipped child whose area falls below this fraction of its parent's
# area is treated as empty and the parent is left uncut.
EPS_AREA = 1e-12

# Vertices closer to a cutting line than this fraction of the polygon
# diameter count as lying on it.
SNAP_REL = 1e-12


def polygon_area(poly: np.ndarray) -> float:
    """Signed shoelace area (positive for counterclockwise vertices)."""
    p = np.asarray(poly, dtype=np.float64)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def polygon_centroid(poly: np.ndarray) -> np.ndarray:
    """Area centroid of a simple polygon."""
    p = np.asarray(poly, dtype=np.float64)
    x, y = p[:, 0], p[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = cross.sum() / 2.0
    if abs(a) < 1e-300:
        return p.mean(axis=0)
    cx = np.dot(x + xn, cross) / (6.0 * a)
    cy = np.dot(y + yn, cross) / (6.0 * a)
    return np.array([cx, cy])


def polygon_diameter(poly: np.ndarray) -> float:
    lo = poly.min(axis=0)
    hi = poly.max(axis=0)
    return float(np.hypot(hi[0] - lo[0], hi[1] - lo[1]))


def _dedup_ring(points: list[np.ndarray], tol: float) -> np.ndarray:
    """Drop consecutive (and wrap-around) duplicate vertices."""
    out: list[np.ndarray] = []
    for p in points:
        if not out or np.hypot(*(p - out[-1])) > tol:
            out.append(p)
    while len(out) > 1 and np.hypot(*(out[0] - out[-1])) <= tol:
        out.pop()
    return np.array(out) if out else np.empty((0, 2))


def _validate_polygon(poly: np.ndarray) -> np.ndarray:
    p = np.asarray(poly, dtype=np.float64)
    if p.ndim != 2 or p.shape[1] != 2 or p.shape[0] < 3:
        raise GeometryError("polygon needs at least 3 two-dimensional vertices")
    if not np.all(np.isfinite(p)):
        raise GeometryError("polygon vertices must be finite")
    if polygon_area(p) <= 0.0:
        raise GeometryError("polygon must be counterclockwise with positive area")
    return p


def split_polygon_by_line(
    poly: np.ndarray, line: tuple[float, float, float], eps_area: float = EPS_AREA
) -> tuple[np.ndarray | None, np.ndarray | None]:
    """Cut a convex polygon by ``a*s + b*t + c = 0`` into closed sides.

    Returns ``(negative_side, positive_side)``; a side the polygon does
    not reach is None.  New vertices appear exactly where the line
    crosses an edge.  A child whose area is below ``eps_area`` times the
    parent area is treated as empty and the full parent is returned on
    the other side, so no area is ever lost to slivers.
    """
    p = _validate_polygon(poly)
    a, b, c = (float(v) for v in line)
    norm = np.hypot(a, b)
    if norm == 0.0:
        raise GeometryError("line normal (a, b) must be nonzero")

    values = p[:, 0] * a + p[:, 1] * b + c
    snap = SNAP_REL * polygon_diameter(p) * norm
    values[np.abs(values) <= snap] = 0.0

    if not np.any(values < 0.0):
        return None, p
    if not np.any(values > 0.0):
        return p, None

    n = p.shape[0]
    neg_chain: list[np.ndarray] = []
    pos_chain: list[np.ndarray] = []
    for i in range(n):
        vi, fi = p[i], values[i]
        fj = values[(i + 1) % n]
        if fi <= 0.0:
            neg_chain.append(vi)
        if fi >= 0.0:
            pos_chain.append(vi)
        if fi * fj < 0.0:
            t = fi / (fi - fj)
            crossing = vi + t * (p[(i + 1) % n] - vi)
            neg_chain.append(crossing)
            pos_chain.append(crossing)

    tol = SNAP_REL * polygon_diameter(p)
    neg = _dedup_ring(neg_chain, tol)
    pos = _dedup_ring(pos_chain, tol)
    parent_area = polygon_area(p)
    floor = eps_area * parent_area
    neg_ok = neg.shape[0] >= 3 and polygon_area(neg) >= floor
    pos_ok = pos.shape[0] >= 3 and polygon_area(pos) >= floor
    if neg_ok and pos_ok:
        return neg, pos
    if neg_ok:
        return p, None
    return None, p


def clip_line_to_polygon(
    poly: np.ndarray, line: tuple[float, float, float]
) -> tuple[np.ndarray, np.ndarray] | None:
    """The chord where a line crosses a convex polygon, or None.

    Returns the two chord endpoints ordered along the line direction
    ``(-b, a)``; touches of negligible length yield None.
    """
    p = _validate_polygon(poly)
    a, b, c = (float(v) for v in line)
    norm = np.hypot(a, b)
    if norm == 0.0:
        raise GeometryError("line normal (a, b) must be nonzero")

    values = p[:, 0] * a + p[:, 1] * b + c
    snap = SNAP_REL * polygon_diameter(p) * norm
    values[np.abs(values) <= snap] = 0.0

    pts: list[np.ndarray] = []
    n = p.shape[0]
    for i in range(n):
        fi, fj = values[i], values[(i + 1) % n]
        if fi == 0.0:
            pts.append(p[i])
        if fi * fj < 0.0:
            t = fi / (fi - fj)
            pts.append(p[i] + t * (p[(i + 1) % n] - p[i]))
    if len(pts) < 2:
        return None
    direction = np.array([-b, a]) / norm
    ts = [float(q @ direction) for q in pts]
    lo, hi = min(range(len(ts)), key=ts.__getitem__), max(range(len(ts)), key=ts.__getitem__)
    if ts[hi] - ts[lo] <= SNAP_REL * polygon_diameter(p):
        return None
    return pts[lo], pts[hi]


def point_in_polygon(poly: np.ndarray, point: np.ndarray, tol: float = 0.0) -> bool:
    """Closed containment test for a convex counterclockwise polygon."""
    p = np.asarray(poly, dtype=np.float64)
    q = np.asarray(point, dtype=np.float64)
    nxt = np.roll(p, -1, axis=0)
    edge = nxt - p
    rel = q[None, :] - p
    cross = edge[:, 0] * rel[:, 1] - edge[:, 1] * rel[:, 0]
    lengths = np.hypot(edge[:, 0], edge[:, 1])
    lengths[lengths == 0.0] = 1.0
    return bool(np.all(cross / lengths >= -tol))


def rect_polygon(bounds: tuple[float, float, float, float]) -> np.ndarray:
    """Counterclockwise rectangle for bounds (smin, smax, tmin, tmax)."""
    smin, smax, tmin, tmax = (float(v) for v in bounds)
    if not (smax > smin and tmax > tmin):
        raise GeometryError("bounds rectangle must be non-degenerate")
    return np.array(
        [[smin, tmin], [smax, tmin], [smax, tmax], [smin, tmax]], dtype=np.float64
    )


def segment_intersects_rect(
    p1: np.ndarray, p2: np.ndarray, bounds: tuple[float, float, float, float]
) -> bool:
    """Liang-Barsky test of a closed segment against a closed rectangle."""
    smin, smax, tmin, tmax = bounds
    x1, y1 = float(p1[0]), float(p1[1])
    dx, dy = float(p2[0]) - x1, float(p2[1]) - y1
    t0, t1 = 0.0, 1.0
    for p, q in (
        (-dx, x1 - smin),
        (dx, smax - x1),
        (-dy, y1 - tmin),
        (dy, tmax - y1),
    ):
        if p == 0.0:
            if q < 0.0:
                return False
            continue
        r = q / p
        if p < 0.0:
            if r > t1:
                return False
            t0 = max(t0, r)
        else:
            if r < t0:
                return False
            t1 = min(t1, r)
    return t0 <= t1
