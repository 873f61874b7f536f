"""Exact tessellation of a 2D input space, rendered as SVG.

A depth-4, width-20 ReLU network over a 2D input tessellates the plane
into convex polygons; later layers' hyperplanes visibly fold where they
cross earlier ones.  The render colors each tile by the spectral norm
of its local linear map (purple low, yellow high).
"""

from pathlib import Path

import numpy as np

import splinegeom as sg
from splinegeom.render import render_tessellation_svg

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

net = sg.random_mlp([2, 20, 20, 20, 1], seed=7, bias="uniform")
slc = sg.Slice(np.zeros(2), np.array([1.0, 0.0]), np.array([0.0, 1.0]), (-2, 2, -2, 2))

tess = sg.subdivide(net, slc)
stats = sg.tessellation_stats(tess)
print(f"tiles: {tess.tile_count}")
print(f"area check: {stats.areas.sum():.12f} of {16.0}")
print(f"spectral norm range: [{stats.spectral_norms.min():.3f}, {stats.spectral_norms.max():.3f}]")

interior = [e for e in tess.edges if e.tile_b is not None]
per_layer = {li: sum(1 for e in interior if e.layer == li) for li in range(net.depth)}
print("interior edge segments by originating layer:", per_layer)

svg = render_tessellation_svg(tess, color_by_norm=True)
path = OUT / "tessellation.svg"
path.write_text(svg)
print("wrote", path)
