"""Train a toy classifier and draw its folded decision boundary.

The boundary of a piecewise-linear classifier is one hyperplane of the
final layer, folded every time it crosses an earlier-layer boundary.
Within each tile it is a straight segment of the zero set of the
signed logit; adjacent tiles' segments meet on shared edges, giving a
continuous red polyline over the gray tessellation.
"""

from pathlib import Path

import numpy as np

import splinegeom as sg
from splinegeom.render import render_tessellation_svg

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

rng = np.random.default_rng(0)
X = rng.uniform(-1, 1, size=(120, 2))
labels = np.where(X[:, 0] * X[:, 1] > 0, 1.0, -1.0)[:, None]  # XOR quadrants
data = sg.Dataset(X, labels)

net = sg.random_mlp([2, 12, 12, 1], seed=2, bias="uniform")
cfg = sg.TrainConfig(learning_rate=0.1, batch_size=data.n, steps=1500, seed=2)
net, trace = sg.train_sgd(net, data, cfg)
outputs, _ = sg.forward_batch(net, X)
err = float(np.mean(np.sign(outputs) != labels))
print(f"final loss {trace[-1]:.4f}, training error {err:.2%}")

slc = sg.Slice(np.zeros(2), np.array([1.0, 0.0]), np.array([0.0, 1.0]), (-1.2, 1.2, -1.2, 1.2))
tess = sg.subdivide(net, slc)
boundary = sg.decision_boundary(tess, 0)
print(f"{tess.tile_count} tiles, boundary crosses {len(boundary.segments)} of them")

svg = render_tessellation_svg(tess, boundary=boundary)
path = OUT / "decision_boundary.svg"
path.write_text(svg)
print("wrote", path)
