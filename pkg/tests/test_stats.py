from __future__ import annotations

import math
import random

import pytest
import scipy.special
import scipy.stats

from evisum.stats import (
    PairedRatings,
    ols_regress,
    paired_ttest,
    regularized_incomplete_beta,
    student_t_cdf,
    student_t_ppf,
    student_t_two_sided_p,
    weighted_kappa,
)


# -- weighted kappa --------------------------------------------------------


def test_kappa_perfect_agreement():
    ratings = PairedRatings.from_pairs([(1, 1), (2, 2), (3, 3)], 1, 3)
    assert weighted_kappa(ratings) == pytest.approx(1.0, abs=1e-12)


def test_kappa_maximal_disagreement():
    ratings = PairedRatings.from_pairs([(1, 2), (2, 1)], 1, 3)
    assert weighted_kappa(ratings) == pytest.approx(-1.0, abs=1e-12)


def test_kappa_shift_invariance():
    base = [(1, 2), (2, 2), (3, 1), (1, 1), (2, 3)]
    shifted = [(a + 4, b + 4) for a, b in base]
    k1 = weighted_kappa(PairedRatings.from_pairs(base, 1, 3))
    k2 = weighted_kappa(PairedRatings.from_pairs(shifted, 5, 7))
    assert k1 == pytest.approx(k2, abs=1e-12)


def test_kappa_undefined_when_expected_agreement_is_one():
    ratings = PairedRatings.from_pairs([(2, 2), (2, 2)], 1, 5)
    with pytest.raises(ValueError, match="undefined"):
        weighted_kappa(ratings)


def test_kappa_bounded():
    rng = random.Random(8)
    for _ in range(200):
        pairs = [(rng.randint(1, 5), rng.randint(1, 5)) for _ in range(rng.randrange(2, 30))]
        ratings = PairedRatings.from_pairs(pairs, 1, 5)
        try:
            k = weighted_kappa(ratings)
        except ValueError:
            continue
        assert -1.0 - 1e-9 <= k <= 1.0 + 1e-9


def test_ratings_validation():
    with pytest.raises(ValueError, match="outside"):
        PairedRatings.from_pairs([(0, 3)], 1, 5)
    with pytest.raises(ValueError, match="no rating pairs"):
        PairedRatings.from_pairs([], 1, 5)
    with pytest.raises(ValueError, match="scale_max"):
        PairedRatings.from_pairs([(1, 1)], 3, 3)
    assert len(PairedRatings.from_pairs([(1, 2), (2, 2)], 1, 3)) == 2


# -- paired t-test -----------------------------------------------------------


def test_ttest_hand_example():
    t, p = paired_ttest([2.0, 4.0, 6.0], [1.0, 3.0, 8.0])
    assert t == pytest.approx(0.0, abs=1e-12)
    assert p == pytest.approx(1.0, abs=1e-12)


def test_ttest_matches_scipy():
    rng = random.Random(12)
    for _ in range(100):
        n = rng.randrange(3, 25)
        x = [rng.gauss(0, 1) for _ in range(n)]
        y = [rng.gauss(0.4, 1.2) for _ in range(n)]
        t, p = paired_ttest(x, y)
        ref = scipy.stats.ttest_rel(x, y)
        assert t == pytest.approx(ref.statistic, abs=1e-9)
        assert p == pytest.approx(ref.pvalue, abs=1e-9)


def test_ttest_antisymmetry():
    x = [1.0, 2.5, 3.0, 4.5]
    y = [0.5, 3.0, 2.0, 5.0]
    t_xy, p_xy = paired_ttest(x, y)
    t_yx, p_yx = paired_ttest(y, x)
    assert t_xy == pytest.approx(-t_yx, abs=1e-12)
    assert p_xy == pytest.approx(p_yx, abs=1e-12)


def test_ttest_identical_inputs():
    t, p = paired_ttest([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert (t, p) == (0.0, 1.0)


def test_ttest_constant_nonzero_difference():
    with pytest.raises(ValueError, match="degenerate variance"):
        paired_ttest([2.0, 3.0, 4.0], [1.0, 2.0, 3.0])


def test_ttest_input_validation():
    with pytest.raises(ValueError, match="length"):
        paired_ttest([1.0, 2.0], [1.0])
    with pytest.raises(ValueError, match="two pairs"):
        paired_ttest([1.0], [2.0])


# -- special functions ----------------------------------------------------


def test_incomplete_beta_against_scipy():
    rng = random.Random(4)
    for _ in range(300):
        a = rng.uniform(0.2, 20)
        b = rng.uniform(0.2, 20)
        x = rng.random()
        ours = regularized_incomplete_beta(a, b, x)
        ref = scipy.special.betainc(a, b, x)
        assert ours == pytest.approx(ref, abs=1e-10)
    assert regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0
    assert regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0


def test_incomplete_beta_validation():
    with pytest.raises(ValueError):
        regularized_incomplete_beta(-1.0, 2.0, 0.5)
    with pytest.raises(ValueError):
        regularized_incomplete_beta(1.0, 2.0, 1.5)


def test_t_cdf_against_scipy():
    rng = random.Random(6)
    for _ in range(200):
        t = rng.uniform(-6, 6)
        df = rng.choice([1, 2, 3, 5, 10, 30, 120])
        assert student_t_cdf(t, df) == pytest.approx(
            scipy.stats.t.cdf(t, df), abs=1e-10
        )


def test_t_two_sided_p_against_scipy():
    for t, df in [(0.0, 5), (1.5, 3), (-2.7, 10), (4.0, 2), (0.3, 100)]:
        ref = 2 * scipy.stats.t.sf(abs(t), df)
        assert student_t_two_sided_p(t, df) == pytest.approx(ref, abs=1e-10)


def test_t_ppf_against_scipy():
    for p, df in [(0.975, 5), (0.9, 12), (0.5, 7), (0.025, 3), (0.999, 30)]:
        assert student_t_ppf(p, df) == pytest.approx(
            scipy.stats.t.ppf(p, df), abs=1e-8
        )
    with pytest.raises(ValueError):
        student_t_ppf(0.0, 5)


# -- OLS -------------------------------------------------------------------


def test_ols_exact_fit():
    res = ols_regress([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert res.slope == pytest.approx(1.0, abs=1e-12)
    assert res.intercept == pytest.approx(0.0, abs=1e-12)
    assert res.r_squared == pytest.approx(1.0, abs=1e-12)
    assert res.stderr == 0.0
    assert res.p_value == 0.0
    assert (res.slope_ci_low, res.slope_ci_high) == (res.slope, res.slope)


def test_ols_constant_ys():
    res = ols_regress([1.0, 2.0, 3.0, 4.0], [5.0, 5.0, 5.0, 5.0])
    assert res.slope == 0.0
    assert res.p_value == 1.0
    assert res.r_squared == 0.0


def test_ols_against_normal_equations():
    rng = random.Random(21)
    for _ in range(100):
        n = rng.randrange(3, 40)
        xs = [rng.uniform(-5, 5) for _ in range(n)]
        if max(xs) == min(xs):
            continue
        ys = [2.0 * x - 1.0 + rng.gauss(0, 0.5) for x in xs]
        res = ols_regress(xs, ys)
        # normal equations solved independently
        sx, sy = sum(xs), sum(ys)
        sxx = sum(x * x for x in xs)
        sxy = sum(x * y for x, y in zip(xs, ys))
        det = n * sxx - sx * sx
        slope = (n * sxy - sx * sy) / det
        intercept = (sy * sxx - sx * sxy) / det
        assert res.slope == pytest.approx(slope, abs=1e-9)
        assert res.intercept == pytest.approx(intercept, abs=1e-9)


def test_ols_against_scipy():
    rng = random.Random(22)
    xs = [rng.uniform(0, 10) for _ in range(25)]
    ys = [0.7 * x + 2.0 + rng.gauss(0, 1.0) for x in xs]
    res = ols_regress(xs, ys)
    ref = scipy.stats.linregress(xs, ys)
    assert res.slope == pytest.approx(ref.slope, abs=1e-9)
    assert res.intercept == pytest.approx(ref.intercept, abs=1e-9)
    assert res.p_value == pytest.approx(ref.pvalue, abs=1e-9)
    assert res.stderr == pytest.approx(ref.stderr, abs=1e-9)
    assert res.r_squared == pytest.approx(ref.rvalue**2, abs=1e-9)


def test_ols_ci_p_coherence():
    rng = random.Random(23)
    for _ in range(100):
        n = rng.randrange(4, 30)
        xs = [rng.uniform(-3, 3) for _ in range(n)]
        if max(xs) == min(xs):
            continue
        ys = [rng.gauss(0.2 * x, 1.0) for x in xs]
        res = ols_regress(xs, ys)
        excludes_zero = res.slope_ci_low > 0 or res.slope_ci_high < 0
        if abs(res.p_value - 0.05) > 1e-6:  # avoid knife-edge flakiness
            assert excludes_zero == (res.p_value < 0.05)


def test_ols_input_validation():
    with pytest.raises(ValueError, match="length"):
        ols_regress([1.0, 2.0], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError, match="three points"):
        ols_regress([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(ValueError, match="constant"):
        ols_regress([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])


def test_degrees_of_freedom_edge():
    # n=3 leaves one df; still matches scipy
    xs = [0.0, 1.0, 2.0]
    ys = [0.1, 0.9, 2.2]
    res = ols_regress(xs, ys)
    ref = scipy.stats.linregress(xs, ys)
    assert res.p_value == pytest.approx(ref.pvalue, abs=1e-9)
