"""Closed-form results for early-phase mixup gradient interference.

Covers the saturated-regime gradient approximations for a misclassified
positive/negative pair, the interference-strength scaling in the pair count,
the loss-fluctuation variance ratio, the mix-ratio equivalence of nonzero-loss
samples, and the three-sample batch/epoch norm-ratio construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DegenerateSignalError(ValueError):
    """The vanilla gradient accumulated to (numerically) zero."""


class DegenerateGeometryError(ValueError):
    """A norm ratio has a (numerically) zero denominator."""


@dataclass(frozen=True)
class EarlyPhasePair:
    """A misclassified positive sample x_i and negative sample x_j."""

    x_i: np.ndarray
    x_j: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x_i", np.asarray(self.x_i, dtype=float))
        object.__setattr__(self, "x_j", np.asarray(self.x_j, dtype=float))
        if self.x_i.shape != self.x_j.shape:
            raise ValueError("pair members must share a dimension")
        if not (np.all(np.isfinite(self.x_i)) and np.all(np.isfinite(self.x_j))):
            raise ValueError("pair members must be finite")


@dataclass(frozen=True)
class InterferenceEstimate:
    epsilon_n: float  # seed-mean interference strength at this pair count
    n: int
    fitted_slope: float  # shared log-log slope of the sweep

    def __post_init__(self):
        if self.epsilon_n < 0:
            raise ValueError("interference strength is a norm ratio, >= 0")


@dataclass(frozen=True)
class InterferenceSweepResult:
    points: list  # (n, seed, epsilon_n) raw rows
    estimates: list  # per-n seed means as InterferenceEstimate
    fitted_slope: float


@dataclass(frozen=True)
class EquivalenceSolution:
    lambda_star: float
    f_loss: float
    f_plus: float
    f_minus: float
    M: float  # symmetric extreme magnitude (f_plus - f_minus)/2
    delta: float  # |lambda_star - 0.5|


def vanilla_grad_early(pair):
    """Saturated-regime update for the plain pair: -x_i + x_j."""
    return -pair.x_i + pair.x_j


def mix_grad_early(pair):
    """Saturated-regime update for their 50% mix: -(x_i + x_j)/4."""
    return -0.25 * (pair.x_i + pair.x_j)


def total_grad_early(pair):
    """Summed plain + mixed update: -(5/4) x_i + (3/4) x_j."""
    return -1.25 * pair.x_i + 0.75 * pair.x_j


@dataclass(frozen=True)
class GaussianPairSource:
    """Draws (positive, negative) sample pairs from two isotropic Gaussians.

    Positive class mean +(separation/2) u, negative -(separation/2) u for a
    unit vector u fixed by ``direction_seed``.
    """

    dim: int
    separation: float
    sigma: float
    direction_seed: int = 0

    def direction(self):
        rng = np.random.default_rng(self.direction_seed)
        u = rng.standard_normal(self.dim)
        return u / np.linalg.norm(u)

    def __call__(self, rng, n):
        u = self.direction()
        mu = 0.5 * self.separation * u
        x_i = mu + self.sigma * rng.standard_normal((n, self.dim))
        x_j = -mu + self.sigma * rng.standard_normal((n, self.dim))
        return x_i, x_j


def interference_strength(x_i, x_j, signs):
    """epsilon_N for one realization: ||sum of signed mix deviations|| / ||sum of plain updates||."""
    x_i = np.atleast_2d(np.asarray(x_i, dtype=float))
    x_j = np.atleast_2d(np.asarray(x_j, dtype=float))
    signs = np.asarray(signs, dtype=float).reshape(-1, 1)
    vanilla = (x_j - x_i).sum(axis=0)
    deviation = (signs * 0.25 * (x_i + x_j)).sum(axis=0)
    denom = np.linalg.norm(vanilla)
    if denom == 0.0:
        raise DegenerateSignalError("plain-pair updates summed to zero")
    return float(np.linalg.norm(deviation) / denom)


def interference_sweep(sampler, n_values, seeds):
    """Measure epsilon_N over pair counts and fit the log-log slope.

    For each (n, seed): draw n pairs, accumulate the plain updates and the
    signed mix deviations (sign a fair coin per pair, so the deviations are
    zero-mean), and record the norm ratio. The slope comes from an OLS fit
    of seed-averaged log epsilon_N against log n.

    The -1/2 decay needs separated class means; with zero separation both
    norms grow like sqrt(n) and the slope flattens to ~0.
    """
    n_values = [int(n) for n in n_values]
    if len(n_values) < 2 or any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ValueError("n_values must be strictly increasing with >= 2 entries")
    points = []
    eps_by_n = {n: [] for n in n_values}
    for seed in seeds:
        rng = np.random.default_rng(seed)
        for n in n_values:
            x_i, x_j = sampler(rng, n)
            signs = rng.integers(0, 2, size=n) * 2 - 1
            eps = interference_strength(x_i, x_j, signs)
            points.append((n, seed, eps))
            eps_by_n[n].append(eps)
    mean_log_eps = np.array([np.mean(np.log(eps_by_n[n])) for n in n_values])
    slope = float(np.polyfit(np.log(n_values), mean_log_eps, 1)[0])
    estimates = [
        InterferenceEstimate(float(np.mean(eps_by_n[n])), n, slope) for n in n_values
    ]
    return InterferenceSweepResult(points, estimates, slope)


def relative_fluctuation(sigma, grad_norm):
    """Noise-to-descent ratio sigma / ||g||; halves whenever ||g|| doubles."""
    if grad_norm <= 0:
        raise ValueError("gradient norm must be positive")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    return sigma / grad_norm


def equivalence_lambda(f_loss, f_plus, f_minus):
    """Mix ratio placing the mixed score of two extreme samples at f_loss.

    lambda* = (f_loss - f_minus) / (f_plus - f_minus); for symmetric
    extremes +-M this is 0.5 + f_loss / (2 M).
    """
    if not f_minus < f_plus:
        raise ValueError("need f_minus < f_plus")
    lam = (f_loss - f_minus) / (f_plus - f_minus)
    return EquivalenceSolution(
        lambda_star=float(lam),
        f_loss=float(f_loss),
        f_plus=float(f_plus),
        f_minus=float(f_minus),
        M=float(0.5 * (f_plus - f_minus)),
        delta=float(abs(lam - 0.5)),
    )


def loss_at_lambda(lam, M, y):
    """Binary cross-entropy at the mixed score M(2 lambda - 1) of symmetric extremes.

    Evaluated as log1p-exp so magnitudes up to M ~ 1e6 stay finite. At
    lambda = 0.5 this is log 2 for either label; for y=1 it decreases
    strictly on lambda in (0.5, 1].
    """
    if M <= 0:
        raise ValueError("M must be positive")
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    if y not in (0, 1):
        raise ValueError("label must be 0 or 1")
    t = M * (2.0 * lam - 1.0)
    return float(np.logaddexp(0.0, -t) if y == 1 else np.logaddexp(0.0, t))


def benr_theoretical(x1, x2, x3):
    """Batch/epoch norm ratios for two positives and one negative, batch size 1.

    Plain training updates by -x1, -x2, +x3 over the three batches. In the
    mixed construction the three 50% mixes (1,2), (1,3), (2,3) contribute
    summed-pair updates with norms ||1.5 (x1+x2)||, ||1.25 x1 - 0.75 x3||
    and ||1.25 x2 - 0.75 x3||. Epoch sums follow the same gradient sign
    convention as the early-phase approximations above, which only affects
    signs, not the norms entering either ratio.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    x3 = np.asarray(x3, dtype=float)
    if not x1.shape == x2.shape == x3.shape:
        raise ValueError("the three samples must share a dimension")

    vanilla_num = np.linalg.norm(x1) + np.linalg.norm(x2) + np.linalg.norm(x3)
    vanilla_den = np.linalg.norm(x1 + x2 - x3)

    g12 = -1.5 * (x1 + x2)
    g13 = -1.25 * x1 + 0.75 * x3
    g23 = -1.25 * x2 + 0.75 * x3
    mix_num = sum(np.linalg.norm(g) for g in (g12, g13, g23))
    mix_den = np.linalg.norm(g12 + g13 + g23)

    tol = 1e-15 * max(vanilla_num, mix_num, 1.0)
    if vanilla_den <= tol or mix_den <= tol:
        raise DegenerateGeometryError("epoch update norm is numerically zero")
    return {
        "benr_vanilla": float(vanilla_num / vanilla_den),
        "benr_mix": float(mix_num / mix_den),
    }
