"""Stats module: worked examples, reference-oracle agreement, invariances."""

import math
import random

import pytest
from hypothesis import given, strategies as st
from scipy import stats as scipy_stats

from plainbench.stats import (
    format_p,
    mean_sd,
    paired_t_test,
    regularized_incomplete_beta,
    student_t_two_sided_p,
)


def test_mean_sd_constant():
    s = mean_sd([5.0, 5.0, 5.0])
    assert (s.n, s.mean, s.sd) == (3, 5.0, 0.0)


def test_mean_sd_worked_example():
    s = mean_sd([1.0, 2.0, 3.0, 4.0])
    assert s.n == 4
    assert s.mean == pytest.approx(2.5)
    assert s.sd == pytest.approx(math.sqrt(5.0 / 3.0), abs=1e-12)
    assert s.sd == pytest.approx(1.29099, abs=1e-5)


def test_mean_sd_single_value():
    assert mean_sd([7.25]).sd == 0.0


def test_mean_sd_empty_rejected():
    with pytest.raises(ValueError):
        mean_sd([])


def test_paired_t_worked_example():
    r = paired_t_test([1.0, 2.0, 3.0, 4.0], [0.0, 2.0, 3.0, 2.0])
    assert r.t == pytest.approx(1.5667, abs=1e-4)
    assert r.df == 3
    assert r.n == 4
    ref = scipy_stats.ttest_rel([1.0, 2.0, 3.0, 4.0], [0.0, 2.0, 3.0, 2.0])
    assert r.p_two_sided == pytest.approx(ref.pvalue, abs=1e-9)


def test_paired_t_identical_vectors_rejected():
    with pytest.raises(ValueError, match="degenerate"):
        paired_t_test([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])


def test_paired_t_constant_difference_rejected():
    # nonzero but constant differences still have zero variance
    with pytest.raises(ValueError, match="degenerate"):
        paired_t_test([2.0, 3.0, 4.0], [1.0, 2.0, 3.0])


def test_paired_t_length_mismatch_rejected():
    with pytest.raises(ValueError, match="length mismatch"):
        paired_t_test([1.0, 2.0], [1.0])


def test_paired_t_too_short_rejected():
    with pytest.raises(ValueError):
        paired_t_test([1.0], [0.0])


def test_oracle_agreement_100_instances():
    rng = random.Random(20240815)
    checked = 0
    while checked < 100:
        n = rng.randint(2, 40)
        a = [rng.gauss(10, 3) for _ in range(n)]
        b = [rng.gauss(9, 3) for _ in range(n)]
        ours = paired_t_test(a, b)
        ref = scipy_stats.ttest_rel(a, b)
        assert ours.t == pytest.approx(ref.statistic, abs=1e-9)
        assert ours.p_two_sided == pytest.approx(ref.pvalue, abs=1e-6)
        checked += 1


def test_incomplete_beta_against_scipy():
    rng = random.Random(7)
    for _ in range(200):
        a = rng.uniform(0.2, 50)
        b = rng.uniform(0.2, 50)
        x = rng.random()
        ours = regularized_incomplete_beta(a, b, x)
        ref = scipy_stats.beta.cdf(x, a, b)
        assert ours == pytest.approx(ref, abs=1e-9)


def test_t_sf_extremes():
    assert student_t_two_sided_p(0.0, 5) == pytest.approx(1.0)
    assert student_t_two_sided_p(1e6, 5) < 1e-20
    assert student_t_two_sided_p(-2.5, 10) == student_t_two_sided_p(2.5, 10)


# integer-valued floats keep the arithmetic exact, so transformed samples can
# never collapse into a zero-variance difference vector
exact = st.integers(min_value=-10_000, max_value=10_000).map(float)


def _nondegenerate(pairs):
    diffs = [x - y for x, y in pairs]
    return len(set(diffs)) > 1


paired_lists = st.lists(st.tuples(exact, exact), min_size=2, max_size=30).filter(
    _nondegenerate)


@given(pairs=paired_lists, shift=exact)
def test_shift_invariance(pairs, shift):
    a = [x for x, _ in pairs]
    b = [y for _, y in pairs]
    base = paired_t_test(a, b)
    shifted = paired_t_test([x + shift for x in a], [y + shift for y in b])
    assert shifted.t == pytest.approx(base.t, rel=1e-6, abs=1e-6)
    assert shifted.p_two_sided == pytest.approx(base.p_two_sided, rel=1e-6, abs=1e-9)


@given(pairs=paired_lists, scale=st.floats(min_value=1e-3, max_value=1e3))
def test_scale_invariance(pairs, scale):
    a = [x for x, _ in pairs]
    b = [y for _, y in pairs]
    base = paired_t_test(a, b)
    scaled = paired_t_test([x * scale for x in a], [y * scale for y in b])
    assert scaled.t == pytest.approx(base.t, rel=1e-6, abs=1e-6)
    assert scaled.p_two_sided == pytest.approx(base.p_two_sided, rel=1e-6, abs=1e-9)


@given(pairs=paired_lists)
def test_antisymmetry(pairs):
    a = [x for x, _ in pairs]
    b = [y for _, y in pairs]
    fwd = paired_t_test(a, b)
    rev = paired_t_test(b, a)
    assert rev.t == pytest.approx(-fwd.t, rel=1e-9, abs=1e-12)
    assert rev.p_two_sided == pytest.approx(fwd.p_two_sided, rel=1e-9, abs=1e-12)


def test_format_p():
    assert format_p(0.0004) == "<0.001"
    assert format_p(0.001) == "0.001"
    assert format_p(0.0344) == "0.034"
    assert format_p(1.0) == "1.000"
    with pytest.raises(ValueError):
        format_p(1.5)
