"""Deterministic SVG figures: tessellations, boundaries, density grids.

Output is plain SVG text with a fixed element order and fixed 6-decimal
coordinates, so the same geometry always renders to identical bytes.
Tile edges are gray, decision boundaries red; tiles can be filled by
the spectral norm of their local map through a three-stop viridis-style
gradient (purple - teal - yellow), normalized per figure with the range
recorded in a legend block.
"""

from __future__ import annotations

import io

import numpy as np

from .complexity import DensityGrid
from .tessellation import DecisionBoundary, SliceTessellation, tessellation_stats

EDGE_COLOR = "#808080"
BOUNDARY_COLOR = "#d62728"

_VIRIDIS_STOPS = ((0x44, 0x01, 0x54), (0x21, 0x91, 0x8C), (0xFD, 0xE7, 0x25))


def viridis3(t: float) -> str:
    """Three-stop viridis-like color for t in [0, 1]."""
    t = min(max(float(t), 0.0), 1.0)
    if t <= 0.5:
        a, b, f = _VIRIDIS_STOPS[0], _VIRIDIS_STOPS[1], t * 2.0
    else:
        a, b, f = _VIRIDIS_STOPS[1], _VIRIDIS_STOPS[2], (t - 0.5) * 2.0
    rgb = tuple(round(x + (y - x) * f) for x, y in zip(a, b))
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def _fmt(v: float) -> str:
    return format(float(v), ".6f")


class _Canvas:
    """Maps slice coordinates into a y-flipped SVG pixel frame."""

    def __init__(self, bounds, width=800.0):
        smin, smax, tmin, tmax = bounds
        self.smin, self.tmin = smin, tmin
        self.scale = width / (smax - smin)
        self.w = width
        self.h = (tmax - tmin) * self.scale

    def xy(self, p) -> tuple[str, str]:
        x = (p[0] - self.smin) * self.scale
        y = self.h - (p[1] - self.tmin) * self.scale
        return _fmt(x), _fmt(y)

    def header(self, out):
        out.write(
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(self.w)}" '
            f'height="{_fmt(self.h)}" viewBox="0 0 {_fmt(self.w)} {_fmt(self.h)}">\n'
        )


def render_tessellation_svg(
    tess: SliceTessellation,
    color_by_norm: bool = False,
    boundary: DecisionBoundary | None = None,
    width: float = 800.0,
) -> str:
    """SVG of a slice tessellation, optionally norm-colored with boundary."""
    canvas = _Canvas(tess.slice.bounds, width)
    out = io.StringIO()
    canvas.header(out)

    fills = ["none"] * tess.tile_count
    norm_lo = norm_hi = 0.0
    if color_by_norm and tess.tile_count:
        norms = tessellation_stats(tess, density_resolution=(1, 1)).spectral_norms
        norm_lo, norm_hi = float(norms.min()), float(norms.max())
        span = norm_hi - norm_lo
        for i, v in enumerate(norms):
            t = 0.5 if span <= 0.0 else (float(v) - norm_lo) / span
            fills[i] = viridis3(t)

    out.write('<g id="tiles">\n')
    for i, tile in enumerate(tess.tiles):
        pts = " ".join(",".join(canvas.xy(p)) for p in tile.polygon)
        out.write(
            f'<polygon points="{pts}" fill="{fills[i]}" '
            f'stroke="{EDGE_COLOR}" stroke-width="1"/>\n'
        )
    out.write("</g>\n")

    if boundary is not None:
        out.write(f'<g id="boundary" stroke="{BOUNDARY_COLOR}" stroke-width="2">\n')
        for seg in boundary.segments:
            (x1, y1), (x2, y2) = canvas.xy(seg.p1), canvas.xy(seg.p2)
            out.write(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}"/>\n')
        out.write("</g>\n")

    if color_by_norm:
        out.write('<g id="legend" font-family="monospace" font-size="12">\n')
        out.write(
            f'<text x="4" y="14">norm min {_fmt(norm_lo)} max {_fmt(norm_hi)}</text>\n'
        )
        out.write("</g>\n")
    out.write("</svg>\n")
    return out.getvalue()


def render_density_svg(grid: DensityGrid, width: float = 800.0) -> str:
    """Grayscale cell map of a density grid (darker = more crossings)."""
    canvas = _Canvas(grid.bounds, width)
    nx, ny = grid.resolution
    smin, smax, tmin, tmax = grid.bounds
    xs = np.linspace(smin, smax, nx + 1)
    ys = np.linspace(tmin, tmax, ny + 1)
    top = int(grid.counts.max(initial=0))
    out = io.StringIO()
    canvas.header(out)
    out.write('<g id="cells">\n')
    for iy in range(ny):
        for ix in range(nx):
            level = 255 if top == 0 else 255 - round(255 * grid.counts[iy, ix] / top)
            color = f"#{level:02x}{level:02x}{level:02x}"
            x0, y0 = canvas.xy((xs[ix], ys[iy + 1]))
            x1, y1 = canvas.xy((xs[ix + 1], ys[iy]))
            w = _fmt(float(x1) - float(x0))
            h = _fmt(float(y1) - float(y0))
            out.write(f'<rect x="{x0}" y="{y0}" width="{w}" height="{h}" fill="{color}"/>\n')
    out.write("</g>\n")
    out.write('<g id="legend" font-family="monospace" font-size="12">\n')
    out.write(f'<text x="4" y="14" fill="#d62728">count min 0 max {top}</text>\n')
    out.write("</g>\n")
    out.write("</svg>\n")
    return out.getvalue()


def write_pgm(grid: DensityGrid, path) -> None:
    """ASCII PGM (P2) dump of a density grid, darker = more crossings."""
    nx, ny = grid.resolution
    top = int(grid.counts.max(initial=0))
    lines = [f"P2", f"{nx} {ny}", "255"]
    for iy in range(ny - 1, -1, -1):
        row = [
            str(255 if top == 0 else 255 - round(255 * grid.counts[iy, ix] / top))
            for ix in range(nx)
        ]
        lines.append(" ".join(row))
    from .serialize import write_text_atomic

    write_text_atomic(path, "\n".join(lines) + "\n")
