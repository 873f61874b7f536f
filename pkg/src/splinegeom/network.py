"""Piecewise-linear networks and their exact local affine structure.

A network here is a stack of dense layers, each applying an affine map
followed by a continuous piecewise-linear activation (ReLU, absolute
value, leaky ReLU, or identity), optionally with a residual (skip)
branch and optionally with batch normalization replacing the bias.

Because every activation is piecewise linear, the whole network is an
affine spline: its input space splits into convex tiles, and on each
tile the network computes a single affine map ``x -> A x + c``.  This
module evaluates networks, extracts the tile-identifying activation
pattern at a point, and recovers the exact ``(A, c)`` of the tile
containing a point by freezing that pattern.

Networks are immutable; every operation returns new values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ShapeError, ValidationError

ACTIVATIONS = ("relu", "abs", "leaky_relu", "identity")

# Activations that bend at zero and hence create hyperplanes.  Identity
# is affine everywhere, so it contributes no tile boundaries.
FOLDING_ACTIVATIONS = ("relu", "abs", "leaky_relu")

BN_EPSILON = 1e-8


def _readonly(a, dtype=np.float64):
    out = np.array(a, dtype=dtype)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class BatchNormState:
    """Per-neuron normalization statistics: mean ``mu`` and std ``nu``."""

    mu: np.ndarray
    nu: np.ndarray
    epsilon: float = BN_EPSILON

    def __post_init__(self):
        object.__setattr__(self, "mu", _readonly(np.atleast_1d(self.mu)))
        object.__setattr__(self, "nu", _readonly(np.atleast_1d(self.nu)))
        if self.epsilon <= 0:
            raise ValidationError("batch norm epsilon must be positive")
        if self.mu.shape != self.nu.shape or self.mu.ndim != 1:
            raise ShapeError("batch norm mu and nu must be equal-length vectors")
        if not (np.all(np.isfinite(self.mu)) and np.all(np.isfinite(self.nu))):
            raise ValidationError("batch norm statistics must be finite")
        if np.any(self.nu < self.epsilon):
            raise ValidationError("batch norm nu entries must be >= epsilon")


@dataclass(frozen=True, eq=False)
class Layer:
    """One dense layer: ``z -> sigma(W z + b) [+ z]``.

    ``weight`` has one row per output neuron.  With batch normalization
    present the bias is unused; the normalization offset takes its place.
    """

    weight: np.ndarray
    bias: np.ndarray
    activation: str = "relu"
    alpha: float = 0.2
    residual: bool = False
    batch_norm: BatchNormState | None = None

    def __post_init__(self):
        object.__setattr__(self, "weight", _readonly(np.atleast_2d(self.weight)))
        object.__setattr__(self, "bias", _readonly(np.atleast_1d(self.bias)))
        if self.activation not in ACTIVATIONS:
            raise ValidationError(f"unknown activation {self.activation!r}")
        if self.activation == "leaky_relu" and not 0.0 < self.alpha < 1.0:
            raise ValidationError("leaky_relu slope alpha must lie in (0, 1)")
        if self.weight.ndim != 2:
            raise ShapeError("layer weight must be a matrix")
        if self.bias.shape != (self.weight.shape[0],):
            raise ShapeError(
                f"bias length {self.bias.shape[0]} != rows {self.weight.shape[0]}"
            )
        if not (np.all(np.isfinite(self.weight)) and np.all(np.isfinite(self.bias))):
            raise ValidationError("layer parameters must be finite")
        if self.batch_norm is not None and self.batch_norm.mu.shape != (self.width,):
            raise ShapeError("batch norm statistics length must equal layer width")
        if self.residual and self.weight.shape[0] != self.weight.shape[1]:
            raise ShapeError("a residual layer requires equal input and output width")

    @property
    def width(self) -> int:
        return self.weight.shape[0]

    @property
    def in_width(self) -> int:
        return self.weight.shape[1]

    @property
    def folds(self) -> bool:
        return self.activation in FOLDING_ACTIVATIONS

    def effective_affine(self) -> tuple[np.ndarray, np.ndarray]:
        """Pre-activation as one affine map, with batch norm folded in."""
        if self.batch_norm is None:
            return self.weight, self.bias
        inv = 1.0 / self.batch_norm.nu
        return self.weight * inv[:, None], -self.batch_norm.mu * inv

    def slopes(self, bits: np.ndarray) -> np.ndarray:
        """Activation slope per neuron for on/off bits (ties go to bit 1)."""
        b = bits.astype(np.float64)
        if self.activation == "relu":
            return b
        if self.activation == "abs":
            return 2.0 * b - 1.0
        if self.activation == "leaky_relu":
            return b + (1.0 - b) * self.alpha
        return np.ones_like(b)


@dataclass(frozen=True, eq=False)
class Network:
    """An ordered stack of layers mapping R^input_dim to R^output_dim."""

    input_dim: int
    layers: tuple[Layer, ...]

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.input_dim < 1:
            raise ValidationError("input_dim must be positive")
        if not self.layers:
            raise ValidationError("a network needs at least one layer")
        prev = self.input_dim
        for i, layer in enumerate(self.layers):
            if layer.in_width != prev:
                raise ShapeError(
                    f"layer {i}: expects input width {layer.in_width}, got {prev}"
                )
            prev = layer.width

    @property
    def output_dim(self) -> int:
        return self.layers[-1].width

    @property
    def widths(self) -> tuple[int, ...]:
        return tuple(layer.width for layer in self.layers)

    @property
    def depth(self) -> int:
        return len(self.layers)

    def truncated(self, n_layers: int) -> "Network":
        """The sub-network made of the first ``n_layers`` layers."""
        if not 1 <= n_layers <= self.depth:
            raise ValidationError(f"n_layers must be in 1..{self.depth}")
        return Network(self.input_dim, self.layers[:n_layers])


@dataclass(frozen=True)
class ActivationPattern:
    """Per-layer on/off bits identifying the tile containing a point.

    Bit k of layer l is 1 iff that neuron's pre-activation is >= 0
    (boundary points land on the non-negative side).
    """

    layer_bits: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(
            self,
            "layer_bits",
            tuple(_readonly(b, dtype=np.uint8) for b in self.layer_bits),
        )

    def __eq__(self, other):
        if not isinstance(other, ActivationPattern):
            return NotImplemented
        return len(self.layer_bits) == len(other.layer_bits) and all(
            a.shape == b.shape and np.array_equal(a, b)
            for a, b in zip(self.layer_bits, other.layer_bits)
        )

    def __hash__(self):
        return hash(self.key())

    def key(self) -> bytes:
        """Compact byte encoding, usable as a dict key."""
        return b"|".join(np.packbits(b).tobytes() for b in self.layer_bits)

    @property
    def total_bits(self) -> int:
        return sum(b.size for b in self.layer_bits)


@dataclass(frozen=True, eq=False)
class AffineMap:
    """The affine function ``x -> A x + c`` a network computes on one tile."""

    A: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "A", _readonly(np.atleast_2d(self.A)))
        object.__setattr__(self, "c", _readonly(np.atleast_1d(self.c)))
        if self.A.shape[0] != self.c.shape[0]:
            raise ShapeError("A row count must match c length")
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.c))):
            raise ValidationError("affine map entries must be finite")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.A @ np.asarray(x, dtype=np.float64) + self.c


@dataclass(frozen=True, eq=False)
class Dataset:
    """Paired inputs (n x D) and labels (n x C); scalars use C = 1."""

    inputs: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.inputs, dtype=np.float64))
        y = np.asarray(self.labels, dtype=np.float64)
        if y.ndim == 1:
            y = y[:, None]
        object.__setattr__(self, "inputs", _readonly(x))
        object.__setattr__(self, "labels", _readonly(y))
        if self.inputs.shape[0] != self.labels.shape[0]:
            raise ShapeError("inputs and labels must have the same row count")
        if self.inputs.shape[0] < 1:
            raise ValidationError("dataset must contain at least one point")
        if not (np.all(np.isfinite(self.inputs)) and np.all(np.isfinite(self.labels))):
            raise ValidationError("dataset entries must be finite")

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def input_dim(self) -> int:
        return self.inputs.shape[1]

    @property
    def label_dim(self) -> int:
        return self.labels.shape[1]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.inputs[idx], self.labels[idx])


def _check_input(net: Network, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.input_dim,):
        raise ShapeError(f"input has shape {x.shape}, expected ({net.input_dim},)")
    return x


def _as_batch(net: Network, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != net.input_dim:
        raise ShapeError(f"inputs have width {X.shape[1]}, expected {net.input_dim}")
    return X


def forward_batch(net: Network, X: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Evaluate the network on an n x D batch.

    Returns the n x C outputs and the list of per-layer pre-activation
    matrices (the value inside the activation, after any normalization).
    """
    Z = _as_batch(net, X)
    preacts = []
    for layer in net.layers:
        W, b = layer.effective_affine()
        pre = Z @ W.T + b
        preacts.append(pre)
        post = layer.slopes(pre >= 0) * pre
        Z = post + Z if layer.residual else post
    return Z, preacts


def forward(net: Network, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Evaluate the network at a single point; also return pre-activations."""
    x = _check_input(net, x)
    Y, preacts = forward_batch(net, x[None, :])
    return Y[0], [p[0] for p in preacts]


def activation_pattern(net: Network, x: np.ndarray) -> ActivationPattern:
    """The on/off pattern of every neuron at ``x`` (ties count as on)."""
    _, preacts = forward(net, x)
    return ActivationPattern(tuple((p >= 0).astype(np.uint8) for p in preacts))


def activation_patterns_batch(net: Network, X: np.ndarray) -> list[ActivationPattern]:
    _, preacts = forward_batch(net, X)
    n = preacts[0].shape[0]
    return [
        ActivationPattern(tuple((p[i] >= 0).astype(np.uint8) for p in preacts))
        for i in range(n)
    ]


@dataclass(frozen=True, eq=False)
class FrozenTrace:
    """Frozen-pattern linearization of a network over a batch of points.

    For each point the activation pattern is frozen and the network is
    the exact affine map ``x -> A x + c`` of the containing tile.  Also
    holds, per layer, the pre-activation values and their row Jacobians
    under the frozen pattern (used for hyperplane distances).
    """

    A: np.ndarray  # n x C x D
    c: np.ndarray  # n x C
    preacts: list[np.ndarray]  # per layer: n x width
    pre_jacobians: list[np.ndarray]  # per layer: n x width x D
    bits: list[np.ndarray]  # per layer: n x width, uint8


def frozen_affine_batch(net: Network, X: np.ndarray) -> FrozenTrace:
    """Compose the per-tile affine maps for every point in the batch."""
    X = _as_batch(net, X)
    n, D = X.shape
    A = np.broadcast_to(np.eye(D), (n, D, D)).copy()
    c = np.zeros((n, D))
    Z = X
    preacts, pre_jacs, bits = [], [], []
    for layer in net.layers:
        W, b = layer.effective_affine()
        pre_A = np.matmul(W, A)
        pre_c = Z @ W.T + b
        bit = (pre_c >= 0).astype(np.uint8)
        slope = layer.slopes(bit)
        preacts.append(pre_c)
        pre_jacs.append(pre_A)
        bits.append(bit)
        A_new = slope[:, :, None] * pre_A
        c_new = slope * (pre_c - np.einsum("nkd,nd->nk", pre_A, X))
        Z_new = slope * pre_c
        if layer.residual:
            A_new += A
            c_new += c
            Z_new += Z
        A, c, Z = A_new, c_new, Z_new
    return FrozenTrace(A=A, c=c, preacts=preacts, pre_jacobians=pre_jacs, bits=bits)


def local_affine(net: Network, x: np.ndarray) -> AffineMap:
    """Exact affine map of the tile containing ``x``.

    Freezes the activation pattern at ``x`` and composes the resulting
    per-layer affine maps, so ``A x + c`` reproduces ``forward(net, x)``
    up to floating-point rounding.
    """
    x = _check_input(net, x)
    trace = frozen_affine_batch(net, x[None, :])
    return AffineMap(trace.A[0], trace.c[0])


def hidden_states_batch(net: Network, X: np.ndarray) -> list[np.ndarray]:
    """Per-layer input representations: ``[z^(0), ..., z^(L-1)]``."""
    Z = _as_batch(net, X)
    states = []
    for layer in net.layers:
        states.append(Z)
        W, b = layer.effective_affine()
        pre = Z @ W.T + b
        post = layer.slopes(pre >= 0) * pre
        Z = post + Z if layer.residual else post
    return states


def with_layer_params(net: Network, index: int, weight: np.ndarray, bias: np.ndarray) -> Network:
    """A copy of the network with one layer's weight and bias replaced."""
    old = net.layers[index]
    new = Layer(
        weight=weight,
        bias=bias,
        activation=old.activation,
        alpha=old.alpha,
        residual=old.residual,
        batch_norm=old.batch_norm,
    )
    layers = list(net.layers)
    layers[index] = new
    return Network(net.input_dim, tuple(layers))


def squared_loss(net: Network, data: Dataset) -> float:
    """Mean squared two-norm error over the dataset."""
    if data.input_dim != net.input_dim or data.label_dim != net.output_dim:
        raise ShapeError("dataset dimensions do not match the network")
    Y, _ = forward_batch(net, data.inputs)
    return float(np.mean(np.sum((data.labels - Y) ** 2, axis=1)))


def batchnorm_update(net: Network, batch: Dataset) -> Network:
    """Recompute every batch-norm layer's statistics from a batch.

    Layers are updated in order: each layer's statistics are the mean
    and standard deviation of its raw pre-activations ``w_k . z`` under
    the already-updated earlier layers, with the std clamped below by
    epsilon.  Afterwards the batch's normalized pre-activations have
    per-neuron mean 0 and (when unclamped) std 1.
    """
    if batch.n < 1:
        raise ValidationError("batch norm update needs a non-empty batch")
    Z = _as_batch(net, batch.inputs)
    new_layers = []
    for layer in net.layers:
        if layer.batch_norm is not None:
            raw = Z @ layer.weight.T
            mu = raw.mean(axis=0)
            nu = np.maximum(raw.std(axis=0), layer.batch_norm.epsilon)
            layer = Layer(
                weight=layer.weight,
                bias=layer.bias,
                activation=layer.activation,
                alpha=layer.alpha,
                residual=layer.residual,
                batch_norm=BatchNormState(mu, nu, layer.batch_norm.epsilon),
            )
        new_layers.append(layer)
        W, b = layer.effective_affine()
        pre = Z @ W.T + b
        post = layer.slopes(pre >= 0) * pre
        Z = post + Z if layer.residual else post
    return Network(net.input_dim, tuple(new_layers))


def glorot_limit(fan_in: int, fan_out: int) -> float:
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def random_mlp(
    dims: Sequence[int],
    *,
    seed: int,
    hidden_activation: str = "relu",
    output_activation: str = "identity",
    alpha: float = 0.2,
    bias: str = "zero",
    residual: bool = False,
    batch_norm: bool = False,
) -> Network:
    """Seeded random network with the given layer widths.

    ``dims`` is ``[input_dim, width_1, ..., output_dim]``.  Weights draw
    uniformly from ±sqrt(6 / (fan_in + fan_out)); biases are zero or
    drawn uniformly from the same interval (``bias="uniform"``).  With
    ``residual=True`` every layer whose input and output widths match
    gets a skip branch.  With ``batch_norm=True`` every layer carries
    normalization state (mu=0, nu=1 until ``batchnorm_update`` runs).
    """
    if len(dims) < 2:
        raise ValidationError("dims needs an input and an output width")
    if bias not in ("zero", "uniform"):
        raise ValidationError("bias must be 'zero' or 'uniform'")
    rng = np.random.default_rng(seed)
    layers = []
    for i in range(len(dims) - 1):
        fan_in, fan_out = dims[i], dims[i + 1]
        limit = glorot_limit(fan_in, fan_out)
        W = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        b = rng.uniform(-limit, limit, size=fan_out) if bias == "uniform" else np.zeros(fan_out)
        last = i == len(dims) - 2
        layers.append(
            Layer(
                weight=W,
                bias=b,
                activation=output_activation if last else hidden_activation,
                alpha=alpha,
                residual=residual and fan_in == fan_out,
                batch_norm=BatchNormState(np.zeros(fan_out), np.ones(fan_out))
                if batch_norm
                else None,
            )
        )
    return Network(dims[0], tuple(layers))
