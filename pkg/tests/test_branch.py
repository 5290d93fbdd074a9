import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from yuletree import branch, stats, tree
from yuletree.branch import BranchPath

params = st.tuples(st.floats(0.1, 5), st.floats(0.1, 3), st.integers(1, 4), st.integers(0, 2**32))


@given(params)
def test_branch_path_invariants(p):
    rate, horizon, dim, seed = p
    for grow in (branch.grow_branch, branch.grow_branch_sequential):
        path = grow(rate, horizon, np.random.default_rng(seed), dim)
        assert path.directions.shape == (path.n_turns + 1, dim)
        np.testing.assert_allclose(np.linalg.norm(path.directions, axis=1), 1, atol=1e-12)
        assert np.all(np.diff(path.breakpoints) > 0)
        # unit speed: the path never gets farther than the time elapsed
        assert branch.max_displacement(path) <= horizon + 1e-12
        np.testing.assert_allclose(path.position(horizon), path.endpoint, atol=1e-12)


@given(params, st.integers(0, 12))
def test_coupling_hits_walk_positions(p, k):
    rate, horizon, dim, seed = p
    path, walk = branch.coupled(rate, horizon, k, np.random.default_rng(seed), dim)
    times = walk.turn_times
    for j in range(k + 1):
        if times[j] <= horizon:
            np.testing.assert_allclose(path.position(times[j]), walk.steps[j], atol=1e-9)


@given(st.integers(0, 2**32), st.integers(1, 5), st.integers(0, 20))
def test_walk_radius_sandwich(seed, dim, k):
    steps = branch.sample_walks(1.0, dim, k, 50, np.random.default_rng(seed))
    total, per = branch.walk_radii(steps)
    assert total.shape == (50,) and per.shape == (50, dim)
    assert np.all(per.max(axis=-1) <= total + 1e-12)
    assert np.all(total <= per.sum(axis=-1) + 1e-12)


def test_walk_increment_norms_are_exponential(rng):
    steps = branch.sample_walks(2.0, 3, 4, 20_000, rng)
    inc = np.linalg.norm(np.diff(steps, axis=1, prepend=0.0), axis=2).ravel()
    rep = stats.ks_one_sample(inc, lambda x: 1 - np.exp(-2.0 * x))
    assert rep.passed, rep.line()


def test_rate_zero_branch_is_straight():
    path = branch.grow_branch(0.0, 2.0, np.random.default_rng(0), 3)
    assert path.n_turns == 0
    assert branch.max_displacement(path) == pytest.approx(2.0)


@pytest.mark.parametrize("times, dirs", [
    ([0.5, 0.4], [[1, 0]] * 3),
    ([0.0], [[1, 0]] * 2),
    ([1.5], [[1, 0]] * 2),
    ([0.5], [[1, 0]]),
])
def test_branch_path_validation(times, dirs):
    with pytest.raises(ValueError):
        BranchPath(np.array(times), np.array(dirs, float), 1.0)


def test_branch_csv():
    path = BranchPath(np.array([0.5]), np.array([[1.0, 0.0], [0.0, 1.0]]), 1.0)
    buf = io.StringIO()
    path.to_csv(buf)
    assert buf.getvalue().splitlines() == [
        "turn_index,time,x0,x1", "0,0.0,0.0,0.0", "1,0.5,0.5,0.0", "2,1.0,0.5,0.5"]


def test_two_constructions_agree_in_law():
    rng = np.random.default_rng(3)
    a = [np.linalg.norm(branch.grow_branch(1.0, 1.0, rng).endpoint) for _ in range(10_000)]
    b = [np.linalg.norm(branch.grow_branch_sequential(1.0, 1.0, rng).endpoint) for _ in range(10_000)]
    rep = stats.ks_two_sample(a, b)
    assert rep.passed, rep.line()


def test_tree_branch_has_branch_law():
    cfg = tree.SimConfig(2, 1.0, 1.0)
    from_tree = [np.linalg.norm(branch.branch_from_tree(tree.grow(cfg, tree.trial_rng(7, i))).endpoint)
                 for i in range(10_000)]
    rng = np.random.default_rng(8)
    direct = [np.linalg.norm(branch.grow_branch(1.0, 1.0, rng).endpoint) for _ in range(10_000)]
    # no-turn paths put an atom at norm 1; round so float noise does not split the tie
    rep = stats.ks_two_sample(np.round(from_tree, 9), np.round(direct, 9))
    assert rep.passed, rep.line()


def test_compiled_max_displacement_has_branch_law():
    rng = np.random.default_rng(9)
    fast = branch.max_displacement_sample(3.0, 1.0, 5000, rng)
    slow = [branch.max_displacement(branch.grow_branch(3.0, 1.0, rng)) for _ in range(5000)]
    assert np.all((fast > 0) & (fast <= 1.0 + 1e-12))
    rep = stats.ks_two_sample(fast, slow)
    assert rep.passed, rep.line()


def test_branch_from_tree_is_a_root_to_leaf_path():
    t = tree.grow(tree.SimConfig(2, 3.0, 1.0, 2), tree.trial_rng(2, 0))
    path = branch.branch_from_tree(t)
    idx = t.first_child_path()
    np.testing.assert_allclose(path.endpoint, t.ends[idx[-1]], atol=1e-12)
    assert path.n_turns == len(idx) - 1


@pytest.mark.parametrize("rate, dim, k", [(1.0, 2, 9), (2.0, 3, 4), (0.5, 1, 2)])
def test_walk_moments(rate, dim, k):
    m = branch.walk_moments(rate, dim, k, 40_000, np.random.default_rng(k))
    assert np.all(np.abs(m.mean) <= 4 * m.mean_se)
    exact = branch.walk_var_exact(rate, dim, k)
    assert np.all(np.abs(m.var - exact) <= 4 * m.var_se)
    # the dimension-free bound
    assert np.all(m.var <= 2 * (k + 1) / rate ** 2)
    off = m.corr[~np.eye(dim, dtype=bool)]
    assert np.all(np.abs(off) <= 4 * m.corr_se)
    assert np.all(np.abs(m.increment_mean) <= 4 * m.increment_mean_se)
    assert np.all(np.abs(m.increment_past_cov) <= 4 * m.increment_past_cov_se + 1e-15)


def test_walk_variance_oracle():
    # E[t^2] = 2 / rate^2 for an Exp(rate) gap and E[nu_n^2] = 1 / D
    rate, dim, k = 1.5, 4, 5
    assert branch.walk_var_exact(rate, dim, k) == pytest.approx((k + 1) * (2 / rate ** 2) / dim)


def test_walk_requires_positive_rate():
    with pytest.raises(ValueError):
        branch.sample_walk(0.0, 3, np.random.default_rng(0))
    with pytest.raises(ValueError):
        branch.walk_moments(1.0, 2, 3, 10, np.random.default_rng(0))


def test_position_interpolates():
    path = BranchPath(np.array([1.0]), np.array([[1.0, 0.0], [0.0, 1.0]]), 2.0)
    np.testing.assert_allclose(path.position(0.5), [0.5, 0.0])
    np.testing.assert_allclose(path.position(1.5), [1.0, 0.5])
    with pytest.raises(ValueError):
        path.position(2.5)
    assert math.isclose(branch.max_displacement(path), math.sqrt(2))
