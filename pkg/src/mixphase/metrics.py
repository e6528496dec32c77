"""Training-dynamics instrumentation: BENR, ATD, gradient cosines, grad rate,
zero-activation counts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import GradSnapshot

# ReLU produces exact zeros, so that mode counts at tolerance 0 by default;
# sigmoid saturation needs a margin.
RELU_TOL = 0.0
SIGMOID_TOL = 1e-6

DEGENERATE_EPOCH_NORM = 1e-15


class DegenerateEpochError(ValueError):
    """Net epoch movement too small for a meaningful batch/epoch ratio."""


@dataclass
class EpochDynamics:
    """Per-epoch update records plus activation probes against a fixed reference."""

    batch_update_norms: list
    epoch_update: np.ndarray
    activations_ref: np.ndarray | None = None
    activations_now: np.ndarray | None = None


@dataclass(frozen=True)
class CosStats:
    avg_cos: float
    prop_lt_half: float
    prop_lt_zero: float
    pair_count: int
    excluded: int = 0

    def __post_init__(self):
        if not (0.0 <= self.prop_lt_half <= 1.0 and 0.0 <= self.prop_lt_zero <= 1.0):
            raise ValueError("proportions must lie in [0, 1]")
        if self.prop_lt_zero > self.prop_lt_half:
            raise ValueError("cos < 0 pairs are a subset of cos < 0.5 pairs")


def _vec(g):
    return g.flat if isinstance(g, GradSnapshot) else np.asarray(g, dtype=float)


def benr(dyn):
    """Sum of batch update norms over the epoch update norm; >= 1 when batches compose the epoch."""
    if not dyn.batch_update_norms:
        raise ValueError("need at least one batch update norm")
    denom = float(np.linalg.norm(dyn.epoch_update))
    if denom < DEGENERATE_EPOCH_NORM:
        raise DegenerateEpochError("epoch update norm below 1e-15")
    return float(np.sum(dyn.batch_update_norms) / denom)


def atd(dyn):
    """L2 distance of the current activation probe from its reference."""
    ref = np.asarray(dyn.activations_ref, dtype=float)
    now = np.asarray(dyn.activations_now, dtype=float)
    if ref.shape != now.shape:
        raise ValueError("activation probes must have equal length")
    return float(np.linalg.norm(now - ref))


def cos_stats_from_cosines(cosines, excluded=0):
    """Aggregate raw cosines into CosStats; thresholds are strict inequalities."""
    if len(cosines) == 0:
        raise ValueError("no pairs with nonzero gradients")
    c = np.asarray(cosines, dtype=float)
    return CosStats(
        avg_cos=float(c.mean()),
        prop_lt_half=float(np.mean(c < 0.5)),
        prop_lt_zero=float(np.mean(c < 0.0)),
        pair_count=len(c),
        excluded=excluded,
    )


def grad_cos_stats(pairs):
    """Cosine statistics over (plain-pair-sum, mixed) gradient pairs.

    Zero-norm members make the cosine undefined; such pairs are excluded
    and counted.
    """
    cosines = []
    excluded = 0
    for g_vanilla, g_mix in pairs:
        a = _vec(g_vanilla)
        b = _vec(g_mix)
        if a.shape != b.shape:
            raise ValueError("gradient pair members must have equal length")
        na = np.linalg.norm(a)
        nb = np.linalg.norm(b)
        if na == 0.0 or nb == 0.0:
            excluded += 1
            continue
        cosines.append(float(np.dot(a, b) / (na * nb)))
    return cos_stats_from_cosines(cosines, excluded)


def grad_rate(grad_mix, grad_vanilla):
    """Norm of the mixed gradient's component orthogonal to the plain gradient,
    over the plain gradient's norm."""
    g_m = _vec(grad_mix)
    g_v = _vec(grad_vanilla)
    if g_m.shape != g_v.shape:
        raise ValueError("gradients must have equal length")
    nv = np.linalg.norm(g_v)
    if nv == 0.0:
        raise ValueError("plain gradient must be nonzero")
    unit = g_v / nv
    perp = g_m - np.dot(g_m, unit) * unit
    return float(np.linalg.norm(perp) / nv)


def zero_activation_count(traces, tol=RELU_TOL, mode="relu"):
    """Mean per-sample count of dead hidden activations.

    ``relu`` mode counts |a| <= tol over hidden-layer post-activations;
    ``sigmoid`` mode counts saturation at either rail (a <= tol or
    a >= 1 - tol). Networks without a hidden layer count zero.
    """
    if tol < 0:
        raise ValueError("tol must be non-negative")
    if mode not in ("relu", "sigmoid"):
        raise ValueError("mode must be 'relu' or 'sigmoid'")
    if not traces:
        raise ValueError("need at least one trace")
    counts = []
    for trace in traces:
        hidden = trace.a[:-1]
        total = 0
        for a in hidden:
            if mode == "relu":
                total += int(np.sum(np.abs(a) <= tol))
            else:
                total += int(np.sum((a <= tol) | (a >= 1.0 - tol)))
        counts.append(total)
    return float(np.mean(counts))
