"""A ReLU network is an affine spline: see the pieces.

Builds a tiny network, picks a point, and shows that the network
restricted to that point's tile is literally one affine map A x + c:
the map reproduces the forward pass, its A equals the finite-difference
Jacobian, and it stays exact until the activation pattern changes.
"""

import numpy as np

import splinegeom as sg

net = sg.random_mlp([2, 6, 6, 1], seed=4, bias="uniform")
x = np.array([0.4, -0.3])

y, preacts = sg.forward(net, x)
pattern = sg.activation_pattern(net, x)
print("f(x) =", y)
print("pattern bits per layer:", [bits.tolist() for bits in pattern.layer_bits])

am = sg.local_affine(net, x)
print("\ntile affine map:\n  A =", am.A, "\n  c =", am.c)
print("A x + c        =", am(x))
print("forward output =", y)

h = 1e-5
fd = np.array([
    (sg.forward(net, x + h * e)[0] - sg.forward(net, x - h * e)[0]) / (2 * h)
    for e in np.eye(2)
]).T
print("\nfinite-difference Jacobian:\n", fd)
print("max |A - J_fd| =", np.abs(am.A - fd).max())

# Walk along a ray: the same (A, c) predicts forward exactly while the
# pattern holds, and starts disagreeing the moment the pattern flips.
direction = np.array([1.0, 0.35])
print("\nwalking x + t * d:")
for t in np.linspace(0, 4.0, 9):
    xt = x + t * direction
    same = sg.activation_pattern(net, xt) == pattern
    gap = np.abs(am(xt) - sg.forward(net, xt)[0]).max()
    print(f"  t={t:.2f}  same tile: {str(same):5s}  |A x + c - f(x)| = {gap:.2e}")
