import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from yuletree import analytic, experiments, fe, stats


def small(rate=1.0, r=0.3, t_max=1.0, h=0.05, **kw):
    return fe.solve(rate, r, t_max, fe.default_d_max(t_max, r, h), h, h, **kw)


@pytest.fixture(scope="module")
def grid():
    return small(1.0, 0.3, 2.0, 0.05)


def test_boundaries_are_exact(grid):
    T, D = np.meshgrid(grid.t_grid, grid.d_grid, indexing="ij")
    assert np.all(grid.q[D <= grid.r + 1e-12] == 0.0)
    assert np.all(grid.q[(D > grid.r + 1e-12) & (T < D - grid.r - 1e-12)] == 1.0)


def test_values_in_unit_interval(grid):
    assert np.all((grid.q >= 0) & (grid.q <= 1))


def test_monotone_in_time(grid):
    assert np.all(np.diff(grid.q, axis=0) <= 1e-3)


@settings(max_examples=8)
@given(st.sampled_from([0.0, 0.5, 2.0, 8.0]), st.sampled_from([0.1, 0.2, 0.3]))
def test_invariants_across_parameters(rate, r):
    g = small(rate, r, 1.0, 0.05)
    assert np.all((g.q >= 0) & (g.q <= 1))
    assert np.all(np.diff(g.q, axis=0) <= 1e-3)
    assert np.all(g.q[:, g.d_grid <= r + 1e-12] == 0)


def test_rate_zero_equals_closed_form():
    rep = experiments.degenerate_check(0.3, 1.0, 0.05)
    assert rep.statistic <= 1e-10


def test_rate_sweep_decreases():
    drift = fe.rate_sweep((1.0, 4.0, 16.0, 64.0), 1.0, 0.3, 0.05, 0.025)
    assert drift.decreasing and drift.toward == "0"
    assert drift.values[-1] < 1e-3


def test_against_monte_carlo():
    g = small(1.0, 0.3, 1.0, 0.025)
    q_mc, n = experiments.mc_miss(1.0, 1.0, 0.3, 0.5, 20_000, seed=6)
    se = stats.binomial_se(q_mc, n)
    assert abs(g.at(1.0, 0.5) - q_mc) <= 4 * se + 0.01


def test_refinement_shrinks():
    rep = experiments.refinement_check(1.0, 0.3, 1.0, (0.1, 0.05, 0.025))
    assert rep.passed, rep.line()


def test_identical_grids_have_zero_discrepancy(grid):
    ref = fe.limit_consistency(grid, grid)
    assert ref.discrepancy == 0.0 and ref.n_shared == grid.q.size


def test_mismatched_grids():
    a = small(1.0, 0.3, 1.0, 0.05)
    with pytest.raises(fe.GridConfigError):
        fe.limit_consistency(a, small(1.0, 0.2, 1.0, 0.05))
    with pytest.raises(fe.GridConfigError):
        fe.limit_consistency(a, small(2.0, 0.3, 1.0, 0.05))
    with pytest.raises(fe.GridConfigError):
        fe.limit_consistency(a, small(1.0, 0.3, 1.0, 0.0125))


def test_grid_extent_error():
    with pytest.raises(fe.GridExtentError) as info:
        fe.solve(1.0, 0.3, 1.0, 0.6, 0.05)
    assert info.value.d > 0 and info.value.t > 0


@pytest.mark.parametrize("kwargs", [
    dict(rate=1, r=0, t_max=1, d_max=2, dt=0.1), dict(rate=-1, r=0.3, t_max=1, d_max=2, dt=0.1),
    dict(rate=1, r=0.3, t_max=1, d_max=2, dt=0.1, n_alpha=8),
    dict(rate=1, r=0.3, t_max=1, d_max=2, dt=0.3),
    dict(rate=1, r=0.3, t_max=1, d_max=2, dt=0.1, sweeps=-1),
])
def test_solver_argument_checks(kwargs):
    with pytest.raises(ValueError):
        fe.solve(**kwargs)


def test_at_rejects_off_grid(grid):
    assert grid.hit(1.0, 0.5) == pytest.approx(1 - grid.at(1.0, 0.5))
    with pytest.raises(ValueError):
        grid.at(1.0, 0.512)


def test_sweeps_change_little():
    a = small(2.0, 0.3, 1.0, 0.05)
    b = small(2.0, 0.3, 1.0, 0.05, sweeps=2)
    assert np.abs(a.q - b.q).max() < 0.01


def test_csv_roundtrip(grid):
    buf = io.StringIO()
    grid.to_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0].startswith("# rate=1.0 r=0.3")
    assert lines[1] == "t,d,q"
    data = np.loadtxt(io.StringIO("\n".join(lines[2:])), delimiter=",")
    np.testing.assert_array_equal(data[:, 2].reshape(grid.q.shape), grid.q)


def test_default_d_max_covers_reach():
    for t, r, h in [(2.0, 0.3, 0.025), (1.0, 0.05, 0.1), (0.5, 0.3, 0.0125)]:
        dm = fe.default_d_max(t, r, h)
        assert dm >= t + r + 2 * h
        assert math.isclose(dm / h, round(dm / h))
