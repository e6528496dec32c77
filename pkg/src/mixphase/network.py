"""Minimal dense feedforward network with exact backprop on soft-label losses.

Everything runs in float64. Layers are plain (weights, biases, activation)
records; gradients flatten layer-major, weights row-major then biases, so
snapshots from different passes are directly comparable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("sigmoid", "relu", "identity")

# Probability guard used wherever explicit probabilities are exponentiated.
# The loss itself is computed in log-space and never goes non-finite.
EPS_CLAMP = 1e-12

GRAD_SOURCES = ("vanilla", "mixup")


def sigmoid(z):
    """Numerically stable logistic function."""
    z = np.asarray(z, dtype=float)
    return np.exp(-np.logaddexp(0.0, -z))


def softplus(z):
    """log(1 + e^z) without overflow."""
    return np.logaddexp(0.0, np.asarray(z, dtype=float))


def _apply_activation(name, z):
    if name == "sigmoid":
        return sigmoid(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "identity":
        return np.asarray(z, dtype=float)
    raise ValueError(f"unknown activation {name!r}")


def _activation_deriv(name, z, a):
    if name == "sigmoid":
        return a * (1.0 - a)
    if name == "relu":
        return (z > 0.0).astype(float)
    if name == "identity":
        return np.ones_like(z)
    raise ValueError(f"unknown activation {name!r}")


@dataclass
class Layer:
    weights: np.ndarray  # [out, in]
    biases: np.ndarray  # [out]
    activation: str

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.biases = np.asarray(self.biases, dtype=float)
        if self.weights.ndim != 2:
            raise ValueError("weights must be a 2-d [out, in] matrix")
        if self.biases.shape != (self.weights.shape[0],):
            raise ValueError("bias length must match weight rows")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.biases))):
            raise ValueError("layer parameters must be finite")

    @property
    def out_dim(self):
        return self.weights.shape[0]

    @property
    def in_dim(self):
        return self.weights.shape[1]


@dataclass
class ModelParams:
    """Ordered stack of dense layers; the last layer is the prediction head."""

    layers: list[Layer]

    def __post_init__(self):
        if not self.layers:
            raise ValueError("model needs at least one layer")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if nxt.in_dim != prev.out_dim:
                raise ValueError(
                    f"layer dims do not chain: {prev.out_dim} -> {nxt.in_dim}"
                )

    @property
    def in_dim(self):
        return self.layers[0].in_dim

    @property
    def out_dim(self):
        return self.layers[-1].out_dim

    def param_count(self):
        return sum(l.weights.size + l.biases.size for l in self.layers)

    def copy(self):
        return ModelParams(
            [Layer(l.weights.copy(), l.biases.copy(), l.activation) for l in self.layers]
        )


@dataclass
class ForwardTrace:
    """Per-layer pre/post activations for one sample."""

    x: np.ndarray
    z: list[np.ndarray]  # pre-activations, one per layer
    a: list[np.ndarray]  # post-activations, one per layer
    f: np.ndarray  # final score = last pre-activation
    loss: float | None = None


@dataclass
class GradSnapshot:
    """Flattened gradient with provenance tag."""

    flat: np.ndarray
    source: str = "vanilla"
    epoch: int = 0

    def __post_init__(self):
        self.flat = np.asarray(self.flat, dtype=float)
        if self.source not in GRAD_SOURCES:
            raise ValueError(f"source must be one of {GRAD_SOURCES}")
        if not np.all(np.isfinite(self.flat)):
            raise ValueError("gradient entries must be finite")


def init_params(layer_sizes, activations, rng):
    """Seeded init: weights uniform in +-1/sqrt(fan_in), biases zero.

    ``layer_sizes`` is (in, h1, ..., out); ``activations`` names one
    activation per layer. Draw order is fixed (layer by layer) so equal
    seeds give bit-identical models.
    """
    if len(activations) != len(layer_sizes) - 1:
        raise ValueError("need one activation per layer")
    layers = []
    for (fan_in, fan_out), act in zip(zip(layer_sizes, layer_sizes[1:]), activations):
        bound = 1.0 / math.sqrt(fan_in)
        w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        layers.append(Layer(w, np.zeros(fan_out), act))
    return ModelParams(layers)


def flatten_params(params):
    """Layer-major flattening: weights row-major, then biases."""
    parts = []
    for l in params.layers:
        parts.append(l.weights.ravel())
        parts.append(l.biases)
    return np.concatenate(parts)


def unflatten_like(flat, params):
    """Inverse of :func:`flatten_params` against a template model."""
    flat = np.asarray(flat, dtype=float)
    if flat.shape != (params.param_count(),):
        raise ValueError("flat vector length does not match parameter count")
    layers = []
    k = 0
    for l in params.layers:
        w = flat[k : k + l.weights.size].reshape(l.weights.shape)
        k += l.weights.size
        b = flat[k : k + l.biases.size].copy()
        k += l.biases.size
        layers.append(Layer(w.copy(), b, l.activation))
    return ModelParams(layers)


def forward(params, x, target=None):
    """Full forward pass on one sample; fills the trace loss if a target is given."""
    x = np.asarray(x, dtype=float)
    if x.shape != (params.in_dim,):
        raise ValueError(
            f"input dim {x.shape} does not match first layer ({params.in_dim},)"
        )
    zs, activs = [], []
    a = x
    for l in params.layers:
        z = l.weights @ a + l.biases
        a = _apply_activation(l.activation, z)
        zs.append(z)
        activs.append(a)
    trace = ForwardTrace(x=x, z=zs, a=activs, f=zs[-1])
    if target is not None:
        trace.loss = loss(trace, target)
    return trace


def _binary_loss(f, y):
    # BCE on the score, evaluated as softplus(f) - y*f: exact and finite for all f.
    return float(softplus(f) - y * f)


def _multiclass_loss(scores, target):
    lse = np.logaddexp.reduce(scores)
    return float(lse - np.dot(target, scores))


def loss(trace, target):
    """Cross-entropy of the trace score against a soft label.

    Binary (1-d score): target is a scalar in [0, 1]. Multiclass: target is
    a simplex vector matching the score length, softmax applied here.
    """
    f = np.asarray(trace.f, dtype=float)
    if f.size == 1:
        y = float(np.asarray(target).reshape(()))
        if not 0.0 <= y <= 1.0:
            raise ValueError("binary soft label must lie in [0, 1]")
        return _binary_loss(float(f.reshape(())), y)
    t = np.asarray(target, dtype=float)
    if t.shape != f.shape:
        raise ValueError("multiclass target must match score length")
    if np.any(t < 0) or abs(t.sum() - 1.0) > 1e-9:
        raise ValueError("multiclass target must be a simplex vector")
    return _multiclass_loss(f, t)


def _head_residual(f, target):
    """dL/df at the head: sigmoid residual for binary, softmax residual otherwise."""
    f = np.asarray(f, dtype=float)
    if f.size == 1:
        y = float(np.asarray(target).reshape(()))
        return sigmoid(f) - y
    t = np.asarray(target, dtype=float)
    shifted = f - f.max()
    p = np.exp(shifted)
    p /= p.sum()
    return p - t


def backward(trace, target, params, source="vanilla", epoch=0):
    """Exact gradient of the loss for one sample, as a flat snapshot."""
    delta = _head_residual(trace.f, target)
    grads = []
    for i in range(len(params.layers) - 1, -1, -1):
        a_prev = trace.a[i - 1] if i > 0 else trace.x
        grads.append((np.outer(delta, a_prev), delta.copy()))
        if i > 0:
            l = params.layers[i]
            act = params.layers[i - 1].activation
            delta = (l.weights.T @ delta) * _activation_deriv(
                act, trace.z[i - 1], trace.a[i - 1]
            )
    parts = []
    for gw, gb in reversed(grads):
        parts.append(gw.ravel())
        parts.append(gb)
    return GradSnapshot(np.concatenate(parts), source=source, epoch=epoch)


def finite_diff_grad(params, x, target, eps):
    """Central-difference gradient, the independent oracle for :func:`backward`."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    theta = flatten_params(params)
    grad = np.zeros_like(theta)
    for k in range(theta.size):
        bumped = theta.copy()
        bumped[k] = theta[k] + eps
        lo_hi = forward(unflatten_like(bumped, params), x, target).loss
        bumped[k] = theta[k] - eps
        lo_lo = forward(unflatten_like(bumped, params), x, target).loss
        grad[k] = (lo_hi - lo_lo) / (2.0 * eps)
    return GradSnapshot(grad)


def sgd_step(params, grad, eta):
    """One plain SGD step; returns a new model, inputs untouched."""
    if eta <= 0:
        raise ValueError("learning rate must be positive")
    flat = grad.flat if isinstance(grad, GradSnapshot) else np.asarray(grad, dtype=float)
    if flat.shape != (params.param_count(),):
        raise ValueError("gradient length does not match parameter count")
    if not np.all(np.isfinite(flat)):
        raise ValueError("refusing step: non-finite gradient entries")
    return unflatten_like(flatten_params(params) - eta * flat, params)


# ---------------------------------------------------------------------------
# Batched internals used by the trainers. These must agree with the
# per-sample operations above; tests cross-check them.


def forward_batch(params, X):
    """Vectorized forward pass. Returns (list of Z [n,w], list of A [n,w])."""
    X = np.asarray(X, dtype=float)
    zs, activs = [], []
    a = X
    for l in params.layers:
        z = a @ l.weights.T + l.biases
        a = _apply_activation(l.activation, z)
        zs.append(z)
        activs.append(a)
    return zs, activs


def batch_scores(params, X):
    zs, _ = forward_batch(params, X)
    return zs[-1]


def batch_losses(params, X, targets):
    """Per-sample losses for a batch; targets are soft labels."""
    f = batch_scores(params, X)
    if f.shape[1] == 1:
        y = np.asarray(targets, dtype=float).reshape(-1)
        return softplus(f[:, 0]) - y * f[:, 0]
    t = np.asarray(targets, dtype=float)
    lse = np.logaddexp.reduce(f, axis=1)
    return lse - np.sum(t * f, axis=1)


def _batch_residual(f, targets):
    if f.shape[1] == 1:
        y = np.asarray(targets, dtype=float).reshape(-1, 1)
        return sigmoid(f) - y
    shifted = f - f.max(axis=1, keepdims=True)
    p = np.exp(shifted)
    p /= p.sum(axis=1, keepdims=True)
    return p - np.asarray(targets, dtype=float)


def _backprop_deltas(params, X, targets):
    zs, activs = forward_batch(params, X)
    deltas = [None] * len(params.layers)
    deltas[-1] = _batch_residual(zs[-1], targets)
    for i in range(len(params.layers) - 1, 0, -1):
        l = params.layers[i]
        act = params.layers[i - 1].activation
        deltas[i - 1] = (deltas[i] @ l.weights) * _activation_deriv(
            act, zs[i - 1], activs[i - 1]
        )
    return zs, activs, deltas


def batch_mean_grad(params, X, targets):
    """Mean-over-batch gradient, flattened. Matches per-sample backward up to summation order."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    _, activs, deltas = _backprop_deltas(params, X, targets)
    parts = []
    for i, d in enumerate(deltas):
        a_prev = activs[i - 1] if i > 0 else X
        parts.append((d.T @ a_prev).ravel() / n)
        parts.append(d.mean(axis=0))
    return np.concatenate(parts)


def per_sample_gradients(params, X, targets):
    """Per-sample flattened gradients, [n, param_count]."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    _, activs, deltas = _backprop_deltas(params, X, targets)
    out = np.empty((n, params.param_count()))
    k = 0
    for i, d in enumerate(deltas):
        a_prev = activs[i - 1] if i > 0 else X
        w_size = params.layers[i].weights.size
        out[:, k : k + w_size] = np.einsum("ni,nj->nij", d, a_prev).reshape(n, w_size)
        k += w_size
        out[:, k : k + d.shape[1]] = d
        k += d.shape[1]
    return out


def per_sample_grad_dots(params, X1, targets1, X2, targets2):
    """Row-wise dot products between per-sample gradients of two passes.

    Exploits the outer-product structure of dense-layer gradients,
    (d x a) . (d' x a') = (d . d')(a . a'), so nothing of size
    [n, param_count] is ever materialized. Row k pairs sample k of pass 1
    with sample k of pass 2.
    """
    X1 = np.asarray(X1, dtype=float)
    X2 = np.asarray(X2, dtype=float)
    _, act1, del1 = _backprop_deltas(params, X1, targets1)
    _, act2, del2 = _backprop_deltas(params, X2, targets2)
    dots = np.zeros(X1.shape[0])
    for i, (d1, d2) in enumerate(zip(del1, del2)):
        a1 = act1[i - 1] if i > 0 else X1
        a2 = act2[i - 1] if i > 0 else X2
        # weight block contributes (d1.d2)(a1.a2), bias block (d1.d2)
        dots += np.sum(d1 * d2, axis=1) * (np.sum(a1 * a2, axis=1) + 1.0)
    return dots


def batch_predict(params, X, class_count):
    """Hard class predictions; binary head thresholds the score at zero."""
    f = batch_scores(params, X)
    if class_count == 2 and f.shape[1] == 1:
        return (f[:, 0] > 0.0).astype(int)
    return np.argmax(f, axis=1)


def batch_accuracy(params, X, labels, class_count):
    pred = batch_predict(params, X, class_count)
    return float(np.mean(pred == np.asarray(labels)))
