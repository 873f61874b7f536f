import numpy as np
import pytest

from splinegeom import Dataset, Layer, Network


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def single_neuron_net(w, b=0.0, activation="relu"):
    """A one-layer, one-neuron network over len(w) inputs."""
    w = np.atleast_1d(np.asarray(w, dtype=float))
    return Network(w.size, (Layer(weight=w[None, :], bias=[b], activation=activation),))


def two_layer_example():
    """W1=[[1,1],[1,-1]] relu, W2=[[1,2]] + 1 identity; f(2,1) = 6."""
    return Network(
        2,
        (
            Layer(weight=[[1.0, 1.0], [1.0, -1.0]], bias=[0.0, 0.0], activation="relu"),
            Layer(weight=[[1.0, 2.0]], bias=[1.0], activation="identity"),
        ),
    )


def random_convex_polygon(rng, n_vertices=6, radius=1.0, center=(0.0, 0.0)):
    """Convex CCW polygon: points on a circle at sorted random angles."""
    angles = np.sort(rng.uniform(0, 2 * np.pi, size=n_vertices))
    # Keep vertices separated so edges are not degenerate.
    while np.min(np.diff(angles, append=angles[0] + 2 * np.pi)) < 0.05:
        angles = np.sort(rng.uniform(0, 2 * np.pi, size=n_vertices))
    r = radius * (0.5 + 0.5 * rng.uniform(size=n_vertices))
    pts = np.stack([np.cos(angles), np.sin(angles)], axis=1) * r[:, None]
    return pts + np.asarray(center)


def grid_dataset(n=16, lo=-1.0, hi=1.0, slope=2.0):
    x = np.linspace(lo, hi, n)[:, None]
    return Dataset(x, slope * x)
