"""Error metrics, the pooled-variance two-sample t-test, and box-plot stats.

The t-test assumes equal (but unknown) variances in both samples:

    t = (mean_a - mean_b) / (s_p * sqrt(1/n_a + 1/n_b)),
    s_p^2 = ((n_a - 1) s_a^2 + (n_b - 1) s_b^2) / (n_a + n_b - 2)

with n_a + n_b - 2 degrees of freedom.  The two-sided p-value comes from
the Student-t CDF expressed through the regularized incomplete beta
function I_x(dof/2, 1/2) at x = dof / (dof + t^2), evaluated with a Lentz
continued fraction, so no statistics library is required.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_BETACF_MAX_ITER = 300
_BETACF_EPS = 1e-14
_TINY = 1e-300


def mae(predictions, truths) -> float:
    p, t = _paired(predictions, truths)
    return float(np.mean(np.abs(p - t)))


def mse(predictions, truths) -> float:
    p, t = _paired(predictions, truths)
    return float(np.mean((p - t) ** 2))


def _paired(predictions, truths) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(predictions, dtype=float).ravel()
    t = np.asarray(truths, dtype=float).ravel()
    if p.size == 0:
        raise ValueError("metric inputs must be nonempty")
    if p.size != t.size:
        raise ValueError(f"length mismatch: {p.size} predictions vs {t.size} truths")
    return p, t


@dataclass(frozen=True)
class TTestResult:
    statistic: float
    dof: int
    p_value: float
    alpha: float
    reject_at_alpha: bool
    degenerate: bool = False  # zero pooled variance in both samples


def t_test_two_sample(a, b, alpha: float = 0.05) -> TTestResult:
    """Two-sided equal-variance t-test of mean(a) == mean(b)."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size < 2 or b.size < 2:
        raise ValueError(f"both samples need >= 2 values, got {a.size} and {b.size}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    n_a, n_b = a.size, b.size
    dof = n_a + n_b - 2
    pooled = ((n_a - 1) * a.var(ddof=1) + (n_b - 1) * b.var(ddof=1)) / dof
    diff = float(a.mean() - b.mean())
    if pooled == 0.0:
        if diff == 0.0:
            return TTestResult(0.0, dof, 1.0, alpha, False, degenerate=True)
        stat = math.inf if diff > 0 else -math.inf
        return TTestResult(stat, dof, 0.0, alpha, True, degenerate=True)
    stat = diff / math.sqrt(pooled * (1.0 / n_a + 1.0 / n_b))
    p = student_t_two_sided_p(stat, dof)
    return TTestResult(float(stat), dof, p, alpha, p < alpha)


def student_t_two_sided_p(t: float, dof: float) -> float:
    """P(|T| >= |t|) for T Student-t distributed with ``dof`` degrees of freedom."""
    if dof <= 0:
        raise ValueError(f"dof must be > 0, got {dof}")
    if math.isinf(t):
        return 0.0
    return regularized_incomplete_beta(0.5 * dof, 0.5, dof / (dof + t * t))


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) via the continued-fraction expansion (Lentz's method)."""
    if a <= 0 or b <= 0:
        raise ValueError("beta parameters must be > 0")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # The continued fraction converges fast only for x below the mean a/(a+b);
    # otherwise evaluate the symmetric complement.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAX_ITER + 1):
        m2 = 2 * m
        coeff = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + coeff * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + coeff / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        coeff = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + coeff * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + coeff / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


@dataclass(frozen=True)
class BoxStats:
    """Box-plot summary: quartiles, whisker ends, and 1.5*IQR outliers.

    ``minimum``/``maximum`` are the whisker ends, i.e. the most extreme
    values still inside [q1 - 1.5*IQR, q3 + 1.5*IQR]; values beyond the
    fences are listed as outliers.
    """

    median: float
    q1: float
    q3: float
    minimum: float
    maximum: float
    outliers: tuple[float, ...]


def summary_stats(values) -> BoxStats:
    """Quartiles use linear interpolation between order statistics."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("summary_stats requires a nonempty vector")
    q1, med, q3 = (float(q) for q in np.quantile(v, [0.25, 0.5, 0.75]))
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = v[(v >= lo_fence) & (v <= hi_fence)]
    outliers = v[(v < lo_fence) | (v > hi_fence)]
    return BoxStats(
        median=med,
        q1=q1,
        q3=q3,
        minimum=float(inside.min()),
        maximum=float(inside.max()),
        outliers=tuple(float(o) for o in np.sort(outliers)),
    )


def box_stats_to_dict(stats: BoxStats) -> dict:
    return {
        "median": stats.median,
        "q1": stats.q1,
        "q3": stats.q3,
        "min": stats.minimum,
        "max": stats.maximum,
        "outliers": list(stats.outliers),
    }
