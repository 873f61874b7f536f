"""Local complexity before, at, and long after interpolation.

Trains a small classifier to zero training error, then keeps training
20x longer.  Local complexity (hyperplanes within a ball around each
training point) rises while fitting and then decays as the tessellation
reorganizes toward the decision boundary, leaving the function smoother
around the data: delayed robustness at toy scale.
"""

from pathlib import Path

import numpy as np

import splinegeom as sg
from splinegeom.render import render_tessellation_svg

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

SEED = 1003


def xor_blobs(seed, n_per=25, spread=0.3):
    rng = np.random.default_rng(seed)
    centers = np.array([[1, 1], [-1, -1], [1, -1], [-1, 1]], dtype=float)
    labels = np.array([1.0, 1.0, -1.0, -1.0])
    X = np.vstack([c + spread * rng.standard_normal((n_per, 2)) for c in centers])
    Y = np.vstack([np.full((n_per, 1), l) for l in labels])
    return sg.Dataset(X, Y)


def train_error(net, data):
    out, _ = sg.forward_batch(net, data.inputs)
    return float(np.mean(np.sign(out) != np.sign(data.labels)))


data = xor_blobs(SEED)
radius = sg.default_lc_radius(data)
print(f"{data.n} points, LC ball radius {radius:.4f}")

net = sg.random_mlp([2, 64, 64, 1], seed=SEED, bias="zero")
cfg = lambda steps: sg.TrainConfig(learning_rate=0.1, batch_size=data.n, steps=steps, seed=SEED)

lc0, _ = sg.dataset_lc(net, data, sg.LcConfig(radius))
print(f"initialization : error {train_error(net, data):5.2%}  mean LC {lc0:.2f}")

steps = 0
while train_error(net, data) > 0:
    net, _ = sg.train_sgd(net, data, cfg(10))
    steps += 10
lc1, _ = sg.dataset_lc(net, data, sg.LcConfig(radius))
print(f"interpolation  : error  0.00%  mean LC {lc1:.2f}   (step {steps})")
net_interp = net

for chunk in range(5):
    net, _ = sg.train_sgd(net, data, cfg(4 * steps))
    lc, _ = sg.dataset_lc(net, data, sg.LcConfig(radius))
    total = steps * (1 + 4 * (chunk + 1))
    print(f"extended       : error {train_error(net, data):5.2%}  mean LC {lc:.2f}   (step {total})")

slc = sg.Slice(np.zeros(2), np.array([1.0, 0.0]), np.array([0.0, 1.0]), (-2, 2, -2, 2))
for tag, snapshot in (("interpolation", net_interp), ("extended", net)):
    tess = sg.subdivide(snapshot, slc)
    svg = render_tessellation_svg(tess, color_by_norm=True,
                                  boundary=sg.decision_boundary(tess, 0))
    path = OUT / f"grokking_{tag}.svg"
    path.write_text(svg)
    print(f"{tag}: {tess.tile_count} tiles -> {path.name}")
