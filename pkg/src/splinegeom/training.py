"""Minibatch gradient descent on the squared loss.

Gradients are computed by hand-rolled backpropagation.  At activation
kinks the subgradient is the slope of the active branch, matching the
>= 0 tie rule used for activation patterns, so patterns, forward
evaluation, and gradients always agree.  Batch-norm statistics are
treated as constants inside a gradient step; they are refreshed by
``batchnorm_update`` before each step when enabled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, ShapeError, ValidationError
from .network import (
    Dataset,
    Layer,
    Network,
    batchnorm_update,
    squared_loss,
)


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for a deterministic seeded training run."""

    learning_rate: float
    batch_size: int
    steps: int
    seed: int
    batch_norm_enabled: bool = False

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValidationError("learning rate must be non-negative")
        if self.batch_size < 1:
            raise ValidationError("batch size must be positive")
        if self.steps < 1:
            raise ValidationError("step count must be positive")


def parameter_gradients(
    net: Network, X: np.ndarray, Y: np.ndarray
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-layer gradients (dW, db) of the mean squared loss on a batch.

    For batch-norm layers the stored statistics are constants and the
    unused bias gets a zero gradient.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    n = X.shape[0]

    inputs, slopes = [], []
    Z = X
    for layer in net.layers:
        W, b = layer.effective_affine()
        pre = Z @ W.T + b
        s = layer.slopes(pre >= 0)
        inputs.append(Z)
        slopes.append(s)
        post = s * pre
        Z = post + Z if layer.residual else post
    if Z.shape != Y.shape:
        raise ShapeError("labels do not match network output shape")

    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * net.depth
    G = (2.0 / n) * (Z - Y)
    for li in range(net.depth - 1, -1, -1):
        layer = net.layers[li]
        dpre = G * slopes[li]
        if layer.batch_norm is not None:
            dpre_raw = dpre / layer.batch_norm.nu
            dW = dpre_raw.T @ inputs[li]
            db = np.zeros(layer.width)
            G_prev = dpre_raw @ layer.weight
        else:
            dW = dpre.T @ inputs[li]
            db = dpre.sum(axis=0)
            G_prev = dpre @ layer.weight
        if layer.residual:
            G_prev = G_prev + G
        grads[li] = (dW, db)
        G = G_prev
    return grads


def train_sgd(
    net: Network, data: Dataset, cfg: TrainConfig
) -> tuple[Network, np.ndarray]:
    """Seeded minibatch gradient descent; returns (trained net, loss trace).

    Minibatches walk a seeded shuffle of the dataset, reshuffled each
    epoch.  With batch norm enabled, the statistics are recomputed on
    each minibatch before its gradient step.  The trace holds the
    full-dataset loss after every step.  Raises DivergenceError naming
    the step if the loss or a gradient turns non-finite.
    """
    if data.input_dim != net.input_dim or data.label_dim != net.output_dim:
        raise ShapeError("dataset dimensions do not match the network")
    if cfg.batch_size > data.n:
        raise ValidationError("batch size exceeds dataset size")

    rng = np.random.default_rng(cfg.seed)
    order = rng.permutation(data.n)
    cursor = 0
    trace = np.empty(cfg.steps)
    for step in range(cfg.steps):
        if cursor + cfg.batch_size > data.n:
            order = rng.permutation(data.n)
            cursor = 0
        idx = order[cursor : cursor + cfg.batch_size]
        cursor += cfg.batch_size
        Xb, Yb = data.inputs[idx], data.labels[idx]

        if cfg.batch_norm_enabled:
            net = batchnorm_update(net, Dataset(Xb, Yb))

        grads = parameter_gradients(net, Xb, Yb)
        new_layers = []
        for layer, (dW, db) in zip(net.layers, grads):
            if not (np.all(np.isfinite(dW)) and np.all(np.isfinite(db))):
                raise DivergenceError(f"non-finite gradient at step {step}", step=step)
            new_layers.append(
                Layer(
                    weight=layer.weight - cfg.learning_rate * dW,
                    bias=layer.bias - cfg.learning_rate * db,
                    activation=layer.activation,
                    alpha=layer.alpha,
                    residual=layer.residual,
                    batch_norm=layer.batch_norm,
                )
            )
        net = Network(net.input_dim, tuple(new_layers))
        loss = squared_loss(net, data)
        if not np.isfinite(loss):
            raise DivergenceError(f"non-finite loss at step {step}", step=step)
        trace[step] = loss
    return net, trace
