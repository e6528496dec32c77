"""Beta(alpha, alpha) ratio sampling and pairwise sample interpolation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MixRatio:
    lam: float

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("mix ratio must lie in [0, 1]")


@dataclass(frozen=True)
class MixedSample:
    features: np.ndarray
    soft_label: float | np.ndarray
    parents: tuple[int, int]
    lam: MixRatio


def sample_lambda(alpha, rng):
    """One Beta(alpha, alpha) draw via two Gamma(alpha, 1) variates."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    while True:
        g1 = rng.gamma(alpha)
        g2 = rng.gamma(alpha)
        s = g1 + g2
        if s > 0.0:  # tiny alpha can underflow both draws to zero
            return MixRatio(g1 / s)


def _soft_label(label, class_count):
    if class_count == 2:
        return float(label)
    out = np.zeros(class_count)
    out[int(label)] = 1.0
    return out


def mix_pair(s_i, s_j, ratio, class_count=2):
    """Convex combination of two samples and their soft labels."""
    if s_i.features.shape != s_j.features.shape:
        raise ValueError("cannot mix samples of different feature dims")
    lam = ratio.lam
    features = lam * s_i.features + (1.0 - lam) * s_j.features
    y_i = _soft_label(s_i.label, class_count)
    y_j = _soft_label(s_j.label, class_count)
    soft = lam * y_i + (1.0 - lam) * y_j
    return MixedSample(features, soft, (s_i.id, s_j.id), ratio)


def mix_batch(batch, alpha, rng, per_pair=False, class_count=2):
    """Mix each sample with a partner from a seeded random permutation.

    One lambda per batch by default; ``per_pair`` draws a fresh lambda for
    every pair. Draw order is permutation first, then lambda(s).
    """
    if not batch:
        raise ValueError("batch must not be empty")
    perm = rng.permutation(len(batch))
    if per_pair:
        ratios = [sample_lambda(alpha, rng) for _ in batch]
    else:
        ratios = [sample_lambda(alpha, rng)] * len(batch)
    return [
        mix_pair(s, batch[perm[k]], ratios[k], class_count=class_count)
        for k, s in enumerate(batch)
    ]


def mix_arrays(X, soft_targets, alpha, rng, per_pair=False):
    """Vectorized batch mixing used by the trainers.

    Agrees with :func:`mix_batch` (same draw order) but operates on arrays;
    ``soft_targets`` is [n] for binary or [n, k] simplex rows.
    """
    n = X.shape[0]
    if n == 0:
        raise ValueError("batch must not be empty")
    perm = rng.permutation(n)
    if per_pair:
        lams = np.array([sample_lambda(alpha, rng).lam for _ in range(n)])
    else:
        lams = np.full(n, sample_lambda(alpha, rng).lam)
    lam_col = lams[:, None]
    X_mix = lam_col * X + (1.0 - lam_col) * X[perm]
    t = np.asarray(soft_targets, dtype=float)
    if t.ndim == 1:
        y_mix = lams * t + (1.0 - lams) * t[perm]
    else:
        y_mix = lam_col * t + (1.0 - lam_col) * t[perm]
    return X_mix, y_mix, lams, perm
