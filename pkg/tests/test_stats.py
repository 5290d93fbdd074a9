import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from yuletree import analytic, stats
from yuletree.stats import StatError, StatReport


@given(st.integers(0, 2**32), st.floats(0, 1))
def test_ks_p_values_in_unit_interval(seed, shift):
    r = np.random.default_rng(seed)
    rep = stats.ks_two_sample(r.normal(size=150), r.normal(shift, size=150))
    assert 0 <= rep.p_value <= 1
    assert rep.passed == (rep.p_value > rep.threshold)


def test_ks_null_calibration():
    # under the null, p < 0.05 about 5% of the time
    r = np.random.default_rng(0)
    p = np.array([stats.ks_two_sample(r.random(300), r.random(300)).p_value for _ in range(400)])
    assert 0.02 < (p < 0.05).mean() < 0.09


def test_ks_detects_shift(rng):
    assert not stats.ks_two_sample(rng.normal(size=2000), rng.normal(0.3, size=2000)).passed
    assert not stats.ks_one_sample(rng.normal(0.3, size=2000), "norm").passed
    assert stats.ks_one_sample(rng.normal(size=2000), "norm").passed


def test_ks_needs_samples():
    with pytest.raises(StatError):
        stats.ks_two_sample(np.zeros(10), np.zeros(500))


def test_chi_square_geometric(rng):
    y = 0.3
    sample = rng.geometric(y, 20_000)
    rep = stats.chi_square_counts(sample, lambda k: analytic.fs_pmf(y, k))
    assert rep.passed and rep.details["bins"] > 5
    wrong = stats.chi_square_counts(sample, lambda k: analytic.fs_pmf(0.32, k))
    assert not wrong.passed


def test_pooled_bins_respect_minimum():
    pmf = lambda k: analytic.fs_pmf(0.2, k)  # noqa: E731
    K = stats.pooled_bins(pmf, 200, 1000)
    e = 1000 * pmf(np.arange(1, K))
    assert e.min() >= 5 and 1000 - e.sum() >= 5
    # one more bin would break the rule
    e2 = 1000 * pmf(np.arange(1, K + 1))
    assert e2.min() < 5 or 1000 - e2.sum() < 5


def test_chi_square_rejects_bad_input():
    with pytest.raises(StatError):
        stats.chi_square_counts([0, 1, 2], lambda k: analytic.fs_pmf(0.5, k))


@given(st.integers(1, 2000), st.floats(0, 1))
def test_wilson_interval_contains_estimate(n, frac):
    k = int(frac * n)
    lo, hi = stats.wilson_interval(k, n)
    assert 0 <= lo <= k / n <= hi <= 1


def test_wilson_coverage():
    # a 3-sigma interval should almost always cover the truth
    r = np.random.default_rng(1)
    p, n = 0.3, 400
    covered = [stats.within_binomial(r.binomial(n, p), n, p).passed for _ in range(500)]
    assert np.mean(covered) > 0.98


def test_mean_within():
    rep = stats.mean_within(np.array([1.0, 1.02, 0.98, 1.0]), 1.0, 0.01)
    assert rep.passed and rep.details["rel_err"] == pytest.approx(0.0)
    assert not stats.mean_within(np.array([1.1, 1.1]), 1.0, 0.01).passed


def test_report_validation_and_line():
    with pytest.raises(ValueError):
        StatReport("x", 0.0, p_value=1.5)
    rep = StatReport("x", 0.1234, p_value=0.5, n=10, seed=7, details={"bins": 3})
    assert rep.passed
    assert rep.line() == "PASS x stat=0.1234 p=0.5 n=10 seed=7 bins=3"
    assert StatReport("y", 1.0, passed=False).line().startswith("FAIL y")


def test_binomial_se():
    assert stats.binomial_se(0.5, 100) == pytest.approx(0.05)
    assert stats.binomial_se(0.0, 100) == 0.0
    assert math.isclose(stats.THREE_SIGMA, math.erf(3 / math.sqrt(2)))
