"""The squared loss is piecewise quadratic in each layer's parameters.

With every sample's activation pattern frozen, the loss restricted to
one layer is exactly quadratic; its constant Hessian is PSD and its
condition number measures how eccentric the local basin is.  Skip
connections keep those Hessians much better conditioned, which is the
affine-spline explanation for why residual stacks optimize so readily.
"""

import numpy as np

import splinegeom as sg

rng = np.random.default_rng(0)
data = sg.Dataset(rng.standard_normal((300, 4)), rng.standard_normal((300, 1)))

net = sg.random_mlp([4, 10, 10, 1], seed=5, bias="uniform")
probe = sg.RegionProbe.create(net, data)

print("per-layer Hessian spectra (frozen patterns):")
for layer in range(net.depth):
    H = sg.layer_hessian(probe, layer)
    rep = sg.spectrum(H)
    print(f"  layer {layer}: lambda_max {rep.eigenvalues[0]:10.4f}  "
          f"kappa {rep.condition_number:10.3g}  cut {rep.cut_count}")

# Quadraticity: second differences of the loss along random parameter
# directions are constant (the region is one quadratic piece).
passes = 0
for k in range(10):
    layer = k % net.depth
    lyr = net.layers[layer]
    d = np.random.default_rng(k).standard_normal(lyr.width * lyr.in_width + lyr.width)
    passes += sg.quadraticity_check(probe, layer, d, radius=0.05)
print(f"\nquadraticity checks passed: {passes}/10")

# Enough samples that a width-16 layer's Hessian (272 parameters) has
# full rank; otherwise the condition numbers measure noise at the cut.
rng = np.random.default_rng(1)
big = sg.Dataset(rng.standard_normal((600, 4)), rng.standard_normal((600, 1)))
print("\nplain vs residual conditioning (10 matched seeds):")
cmp = sg.compare_architectures(16, 4, big, seeds=range(10))
print(f"  median kappa plain:    {cmp.plain_median:.3g}")
print(f"  median kappa residual: {cmp.residual_median:.3g}")
better = np.sum(cmp.residual_per_seed < cmp.plain_per_seed)
print(f"  residual better in {better}/10 seed pairs")
