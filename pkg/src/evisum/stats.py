"""Agreement and inference statistics: linearly weighted kappa, the
paired t-test, and simple OLS regression with a slope confidence interval.

The Student-t distribution is computed here via the regularized
incomplete beta function (Lentz's continued fraction), so the package has
no runtime dependency on scipy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence


@dataclass(frozen=True)
class PairedRatings:
    """Two raters' scores over the same items on a shared ordinal scale."""

    scale_min: int
    scale_max: int
    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        if self.scale_max <= self.scale_min:
            raise ValueError("scale_max must exceed scale_min")
        if not self.pairs:
            raise ValueError("no rating pairs")
        for a, b in self.pairs:
            if not (self.scale_min <= a <= self.scale_max):
                raise ValueError(f"rating {a} outside [{self.scale_min}, {self.scale_max}]")
            if not (self.scale_min <= b <= self.scale_max):
                raise ValueError(f"rating {b} outside [{self.scale_min}, {self.scale_max}]")

    @classmethod
    def from_pairs(
        cls, pairs: Iterable[tuple[int, int]], scale_min: int, scale_max: int
    ) -> "PairedRatings":
        return cls(scale_min, scale_max, tuple((a, b) for a, b in pairs))

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class RegressionResult:
    slope: float
    intercept: float
    slope_ci_low: float
    slope_ci_high: float
    p_value: float
    r_squared: float
    stderr: float
    n: int


def _betacf(a: float, b: float, x: float, tol: float = 1e-12) -> float:
    # Lentz's algorithm for the continued fraction of I_x(a, b).
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
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
        if abs(delta - 1.0) < tol:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise ValueError("shape parameters must be positive")
    if x < 0 or x > 1:
        raise ValueError("x outside [0, 1]")
    if x == 0:
        return 0.0
    if x == 1:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # The continued fraction converges fast on one side of the mean;
    # use the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) for the other.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_cdf(t: float, df: float) -> float:
    if df <= 0:
        raise ValueError("df must be positive")
    if t == 0:
        return 0.5
    tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
    return 1.0 - tail if t > 0 else tail


def student_t_two_sided_p(t: float, df: float) -> float:
    if df <= 0:
        raise ValueError("df must be positive")
    if math.isinf(t):
        return 0.0
    if t == 0:
        return 1.0
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


def student_t_ppf(p: float, df: float) -> float:
    """Inverse CDF by bisection (monotone, so this converges to double
    precision after enough halvings)."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must be strictly between 0 and 1")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -student_t_ppf(1.0 - p, df)
    lo, hi = 0.0, 1.0
    while student_t_cdf(hi, df) < p:
        hi *= 2.0
        if hi > 1e18:
            raise ArithmeticError("quantile bracket exploded")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if student_t_cdf(mid, df) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def weighted_kappa(ratings: PairedRatings) -> float:
    """Cohen's kappa with linear agreement weights.

    w(i, j) = 1 - |i - j| / (k - 1) over the k-point scale. Raises when
    expected agreement is 1 (both raters glued to one category), where
    kappa is undefined.
    """
    k = ratings.scale_max - ratings.scale_min + 1
    cats = range(ratings.scale_min, ratings.scale_max + 1)

    def weight(a: int, b: int) -> float:
        return 1.0 - abs(a - b) / (k - 1)

    n = len(ratings)
    p_obs = sum(weight(a, b) for a, b in ratings.pairs) / n
    marg_a = {c: 0 for c in cats}
    marg_b = {c: 0 for c in cats}
    for a, b in ratings.pairs:
        marg_a[a] += 1
        marg_b[b] += 1
    p_exp = sum(
        weight(i, j) * (marg_a[i] / n) * (marg_b[j] / n) for i in cats for j in cats
    )
    if math.isclose(p_exp, 1.0, abs_tol=1e-12):
        raise ValueError("kappa is undefined: expected agreement is 1")
    return (p_obs - p_exp) / (1.0 - p_exp)


def paired_ttest(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Two-sided paired t-test. Returns (t, p) with df = n - 1.

    All-zero differences give (0, 1); a constant nonzero difference has
    zero variance and no finite statistic, so it raises.
    """
    if len(x) != len(y):
        raise ValueError("x and y differ in length")
    n = len(x)
    if n < 2:
        raise ValueError("need at least two pairs")
    diffs = [a - b for a, b in zip(x, y)]
    mean = sum(diffs) / n
    var = sum((d - mean) ** 2 for d in diffs) / (n - 1)
    if var == 0.0:
        if mean == 0.0:
            return 0.0, 1.0
        raise ValueError("degenerate variance: differences are a nonzero constant")
    t = mean / math.sqrt(var / n)
    return t, student_t_two_sided_p(t, n - 1)


def ols_regress(xs: Sequence[float], ys: Sequence[float]) -> RegressionResult:
    """Simple least squares ys = intercept + slope * xs with a two-sided
    slope test and 95% confidence interval (Student-t, n - 2 df)."""
    if len(xs) != len(ys):
        raise ValueError("xs and ys differ in length")
    n = len(xs)
    if n < 3:
        raise ValueError("need at least three points")
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    sxx = sum((xi - mean_x) ** 2 for xi in xs)
    if sxx == 0.0:
        raise ValueError("xs are constant")
    sxy = sum((xi - mean_x) * (yi - mean_y) for xi, yi in zip(xs, ys))
    slope = sxy / sxx
    intercept = mean_y - slope * mean_x
    df = n - 2
    ssr = sum((yi - intercept - slope * xi) ** 2 for xi, yi in zip(xs, ys))
    sst = sum((yi - mean_y) ** 2 for yi in ys)
    r_squared = 0.0 if sst == 0.0 else 1.0 - ssr / sst
    r_squared = min(max(r_squared, 0.0), 1.0)
    stderr = math.sqrt(ssr / df / sxx)
    if stderr == 0.0:
        p = 1.0 if slope == 0.0 else 0.0
        return RegressionResult(slope, intercept, slope, slope, p, r_squared, 0.0, n)
    t = slope / stderr
    p = student_t_two_sided_p(t, df)
    crit = student_t_ppf(0.975, df)
    return RegressionResult(
        slope=slope,
        intercept=intercept,
        slope_ci_low=slope - crit * stderr,
        slope_ci_high=slope + crit * stderr,
        p_value=p,
        r_squared=r_squared,
        stderr=stderr,
        n=n,
    )
