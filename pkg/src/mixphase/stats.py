"""Welch's unequal-variance t-test, one-tailed (mean(a) > mean(b))."""

from __future__ import annotations

import math

_MAX_CF_ITER = 300
_CF_EPS = 1e-15


def _betacf(a, b, x):
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_CF_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise RuntimeError("incomplete beta continued fraction did not converge")


def reg_inc_beta(a, b, x):
    """Regularized incomplete beta I_x(a, b)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_sf(t, dof):
    """P(T > t) for Student's t with ``dof`` degrees of freedom."""
    if dof <= 0:
        raise ValueError("degrees of freedom must be positive")
    x = dof / (dof + t * t)
    tail = 0.5 * reg_inc_beta(0.5 * dof, 0.5, x)
    return tail if t >= 0 else 1.0 - tail


def _mean_var(values):
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, var, n


def welch_t_one_tailed(group_a, group_b):
    """Welch statistic, Welch-Satterthwaite dof, and the one-tailed p-value
    for the alternative mean(a) > mean(b)."""
    group_a = [float(v) for v in group_a]
    group_b = [float(v) for v in group_b]
    if len(group_a) < 2 or len(group_b) < 2:
        raise ValueError("each group needs at least 2 values")
    ma, va, na = _mean_var(group_a)
    mb, vb, nb = _mean_var(group_b)
    sa, sb = va / na, vb / nb
    pooled = sa + sb
    if pooled == 0.0:
        raise ValueError("both groups have zero variance")
    t = (ma - mb) / math.sqrt(pooled)
    dof = pooled**2 / (sa**2 / (na - 1) + sb**2 / (nb - 1))
    return {"t": t, "p": student_t_sf(t, dof), "dof": dof}
