"""Summary statistics and the paired t-test used for system comparisons.

The Student-t tail probability is computed here directly via the regularized
incomplete beta function (Lentz's continued fraction, lgamma normalization)
so the package has no runtime dependency on a stats library.  Accuracy is
validated against an independent reference implementation in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

_CF_EPS = 1e-15
_CF_MAX_ITER = 300
_FPMIN = 1e-300


@dataclass(frozen=True)
class SummaryStat:
    """Sample mean and standard deviation (n-1 denominator)."""
    n: int
    mean: float
    sd: float


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: int
    p_two_sided: float
    n: int


def mean_sd(values: list[float]) -> SummaryStat:
    """Arithmetic mean and sample SD; sd is 0 for a single value."""
    if not values:
        raise ValueError("mean_sd of an empty list")
    n = len(values)
    mean = sum(values) / n
    if n == 1:
        return SummaryStat(n=1, mean=mean, sd=0.0)
    var = sum((x - mean) ** 2 for x in values) / (n - 1)
    return SummaryStat(n=n, mean=mean, sd=math.sqrt(var))


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (Lentz's method)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x outside [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    # choose the branch where the continued fraction converges fast
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, df: int) -> float:
    """P(|T| >= |t|) under Student's t with df degrees of freedom."""
    if df < 1:
        raise ValueError("df must be >= 1")
    p = regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
    return min(1.0, max(0.0, p))


def paired_t_test(a: list[float], b: list[float]) -> TTestResult:
    """Paired two-sided t-test on elementwise differences a - b."""
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    n = len(a)
    if n < 2:
        raise ValueError("paired t-test needs at least 2 pairs")
    diffs = [x - y for x, y in zip(a, b)]
    summary = mean_sd(diffs)
    if summary.sd == 0.0:
        raise ValueError("degenerate: identical paired differences")
    t = summary.mean / (summary.sd / math.sqrt(n))
    df = n - 1
    return TTestResult(t=t, df=df, p_two_sided=student_t_two_sided_p(t, df), n=n)


def format_p(p: float) -> str:
    """Render a p-value the way comparison tables present it."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p outside [0, 1]")
    if p < 0.001:
        return "<0.001"
    return f"{p:.3f}"
