import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from yuletree import analytic, fe, geometry, kernels, stats, tree
from yuletree.tree import BudgetExceeded, SimConfig

configs = st.builds(
    SimConfig,
    dim=st.integers(1, 4),
    rate=st.floats(0, 4),
    horizon=st.floats(0.05, 1.5),
    master_seed=st.integers(0, 2**32),
)


def grown(cfg):
    return tree.grow(cfg, tree.trial_rng(cfg.master_seed, 0))


@given(configs)
def test_structure_invariants(cfg):
    t = grown(cfg)
    n = len(t)
    assert t.leaf_count == t.branch_point_count + 1
    assert n == 2 * t.branch_point_count + 1
    assert t.parent[0] == -1 and np.all(t.starts[0] == 0)
    for k in range(1, n):
        p = t.parent[k]
        assert 0 <= p < k and not t.is_leaf[p]
        np.testing.assert_array_equal(t.starts[k], t.ends[p])
        assert t.birth[k] == pytest.approx(t.birth[p] + t.lengths[p], abs=1e-12)
    # every branch point starts exactly two segments
    counts = np.bincount(t.parent[1:], minlength=n)
    np.testing.assert_array_equal(counts[~t.is_leaf], 2)
    np.testing.assert_array_equal(counts[t.is_leaf], 0)
    # a segment cannot outgrow its time budget
    assert np.all(t.lengths <= cfg.horizon - t.birth + 1e-12)


@given(configs)
def test_every_root_to_leaf_path_has_length_horizon(cfg):
    t = grown(cfg)
    for leaf in t.leaves:
        k, total = leaf.segment, 0.0
        while k >= 0:
            total += t.lengths[k]
            k = t.parent[k]
        assert abs(total - cfg.horizon) <= 1e-9


@given(configs)
def test_radius_and_length_bounds(cfg):
    t = grown(cfg)
    assert t.radius <= cfg.horizon + 1e-12
    assert t.total_length >= cfg.horizon - 1e-9
    assert t.total_length == pytest.approx(t.lengths.sum())
    for bp in t.branch_points:
        assert 0 < bp.time < cfg.horizon


@given(configs)
def test_growth_is_deterministic(cfg):
    a, b = grown(cfg), grown(cfg)
    for name in ("starts", "ends", "birth", "parent", "is_leaf"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))


def test_rate_zero_is_a_single_segment():
    t = grown(SimConfig(3, 0.0, 2.0, 7))
    assert len(t) == 1 and t.leaf_count == 1
    assert t.lengths[0] == pytest.approx(2.0)


def test_arrays_are_read_only():
    t = grown(SimConfig(2, 2.0, 1.0, 1))
    with pytest.raises(ValueError):
        t.ends[0, 0] = 1.0


@pytest.mark.parametrize("kwargs", [
    dict(dim=0, rate=1, horizon=1), dict(dim=2, rate=-1, horizon=1),
    dict(dim=2, rate=1, horizon=0), dict(dim=2, rate=math.inf, horizon=1),
    dict(dim=2, rate=1, horizon=1, max_segments=0),
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SimConfig(**kwargs)


def test_budget_exceeded():
    cfg = SimConfig(2, 6.0, 1.0, 3, max_segments=50)
    assert cfg.over_budget()
    with pytest.raises(BudgetExceeded) as info:
        grown(cfg)
    assert info.value.limit == 50 and info.value.partial_count > 50


def test_budget_failures_are_recorded_not_raised():
    cfg = SimConfig(2, 3.0, 1.0, 3, max_segments=40)
    batch = tree.run_trials(cfg, 50)
    assert batch.failed and batch.summaries
    assert len(batch.failed) + len(batch) == 50
    assert {f.trial for f in batch.failed}.isdisjoint(s.trial for s in batch.summaries)


def test_segment_csv_layout():
    t = grown(SimConfig(2, 1.5, 1.0, 4))
    buf = io.StringIO()
    t.to_csv(buf)
    rows = buf.getvalue().splitlines()
    assert rows[0] == "segment_id,parent_id,birth_time,x0,x1,y0,y1"
    assert len(rows) == len(t) + 1
    back = np.loadtxt(io.StringIO(buf.getvalue()), delimiter=",", skiprows=1, ndmin=2)
    np.testing.assert_array_equal(back[:, 3:5], t.starts)
    np.testing.assert_array_equal(back[:, 5:7], t.ends)


def test_child_seeds_are_stable_and_distinct():
    seeds = [tree.child_seed(5, i) for i in range(1000)]
    assert len(set(seeds)) == 1000
    assert seeds == [tree.child_seed(5, i) for i in range(1000)]
    assert tree.child_seed(5, 0) != tree.child_seed(6, 0)


def test_trial_stream_independent_of_threads(monkeypatch):
    cfg = SimConfig(2, 1.0, 1.0, 99)
    probes = [((0.3, 0.0), 0.2)]
    monkeypatch.setenv("YULE_THREADS", "1")
    one = tree.run_trials(cfg, 200, probes)
    monkeypatch.setenv("YULE_THREADS", "3")
    three = tree.run_trials(cfg, 200, probes)
    assert one.summaries == three.summaries


def test_trial_summary_csv(tmp_path):
    batch = tree.run_trials(SimConfig(2, 1.0, 1.0, 1), 5, [((0.3, 0.0), 0.2)])
    path = tmp_path / "t.csv"
    batch.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "trial,seed,radius,total_length,leaf_count,branch_points,hit_0"
    assert len(lines) == 6


def test_leaf_count_law():
    batch = tree.run_trials(SimConfig(2, 1.0, 1.0, 11), 5000)
    rep = stats.chi_square_counts(batch.leaf_counts, lambda k: analytic.fs_pmf(math.exp(-1), k))
    assert rep.passed, rep.line()
    rep = stats.mean_within(batch.leaf_counts, math.e, 0.05)
    assert rep.passed, rep.line()


@pytest.mark.parametrize("d, r", [(0.5, 0.2), (0.8, 0.3)])
def test_rate_zero_hit_fraction(d, r):
    # one straight ray: it passes within r of x iff its angle is within arcsin(r/d)
    batch = tree.run_trials(SimConfig(2, 0.0, 1.0, 2), 20_000, [((d, 0.0), r)])
    target = math.asin(r / d) / math.pi
    rep = stats.within_binomial(int(batch.hits(0).sum()), len(batch), target)
    assert rep.passed, rep.line()


def test_probe_hit_against_solver():
    g = fe.solve(1.0, 0.2, 1.0, fe.default_d_max(1.0, 0.2, 0.025), 0.025)
    batch = tree.run_trials(SimConfig(2, 1.0, 1.0, 8), 10_000, [((0.3, 0.0), 0.2)])
    rep = stats.within_binomial(int(batch.hits(0).sum()), len(batch), g.hit(1.0, 0.3))
    assert rep.passed, rep.line()


def test_scaling_law_small():
    s = 2.0
    a = tree.run_trials(SimConfig(2, 1.0, 2.0, 21), 3000)
    b = tree.run_trials(SimConfig(2, 2.0, 1.0, 22), 3000)
    assert stats.ks_two_sample(a.radii / s, b.radii).passed
    assert stats.ks_two_sample(a.lengths / s, b.lengths).passed


@pytest.mark.parametrize("seed", range(5))
def test_area_sandwich(seed):
    r = 0.05
    t = grown(SimConfig(2, 3.0, 1.0, seed))
    area, se = tree.neighbourhood_area(t, r, 40_000, np.random.default_rng(seed))
    lo = math.pi * r * r
    hi = 2 * r * t.total_length + math.pi * r * r / 2 * (t.leaf_count + 1)
    assert lo - 4 * se <= area <= hi + 4 * se


def test_min_distance_matches_segments(rng):
    t = grown(SimConfig(3, 2.0, 1.0, 5))
    x = rng.normal(size=3)
    brute = min(geometry.point_segment_distance(x, s) for s in t.segments())
    assert t.min_distance(x) == pytest.approx(brute, abs=1e-12)


def test_first_child_path_ends_at_a_leaf():
    t = grown(SimConfig(2, 3.0, 1.0, 6))
    path = t.first_child_path()
    assert path[0] == 0 and t.is_leaf[path[-1]]
    for a, b in zip(path, path[1:]):
        assert t.parent[b] == a and b == t.children(a).min()


# --- lazily grown statistics ----------------------------------------------------

def test_full_cover_reproduces_grow_exactly():
    # prune=False draws in the same order as grow, so the trees coincide
    cfg = SimConfig(2, 3.0, 1.0, 0)
    pts = geometry.hausdorff_grid(np.zeros(2), 0.4, 0.05)
    pt = geometry.build_point_tree(pts, leaf_size=8)
    for i in range(10):
        m, _, status = kernels.cover(
            2, 3.0, 1.0, pt.points, np.zeros(len(pts)), np.full(len(pts), np.inf), np.zeros(2), 0.4,
            pt.center, pt.radius, pt.left, pt.right, pt.lo, pt.hi, 10**6, False, tree.trial_rng(1, i))
        assert status == kernels.OK
        t = tree.grow(cfg, tree.trial_rng(1, i))
        a, b = geometry.clip_segments(t.starts, t.ends, np.zeros(2), 0.4)
        np.testing.assert_allclose(m, geometry.min_distances(pt.points, a, b), atol=1e-12)


def test_lazy_hausdorff_has_the_full_law():
    cfg = SimConfig(2, 4.0, 1.0, 0)
    lazy = [tree.hausdorff_lazy(cfg, 0.4, 0.04, tree.trial_rng(31, i)).value for i in range(400)]
    full = []
    for i in range(400):
        t = tree.grow(cfg, tree.trial_rng(32, i))
        full.append(geometry.hausdorff_to_ball((t.starts, t.ends), np.zeros(2), 0.4, 0.04).value)
    assert stats.ks_two_sample(lazy, full).passed


def test_lazy_hausdorff_censoring():
    # censoring reports the floor exactly as often as the uncensored value falls below it
    cfg = SimConfig(2, 4.0, 1.0, 0)
    floor = 0.25
    exact = [tree.hausdorff_lazy(cfg, 0.4, 0.04, tree.trial_rng(33, i)) for i in range(600)]
    cens = [tree.hausdorff_lazy(cfg, 0.4, 0.04, tree.trial_rng(34, i), floor=floor) for i in range(600)]
    for e in cens:
        assert (e.value == floor) if e.censored else (e.value > floor)
    p1 = np.mean([e.value <= floor for e in exact])
    p2 = np.mean([e.censored for e in cens])
    p = (p1 + p2) / 2
    assert 0.05 < p < 0.95
    assert abs(p1 - p2) <= 4 * math.sqrt(2 * p * (1 - p) / 600)


def test_radius_reaches_matches_full_frequency():
    cfg = SimConfig(2, 3.0, 1.0, 0)
    target = 0.7
    lazy = sum(tree.radius_reaches(cfg, target, tree.trial_rng(41, i)) for i in range(4000))
    full = sum(tree.grow(cfg, tree.trial_rng(42, i)).radius >= target for i in range(4000))
    p = (lazy + full) / 8000
    se = math.sqrt(2 * p * (1 - p) / 4000)
    assert abs(lazy - full) / 4000 <= 4 * se


def test_radius_reaches_trivial_targets():
    cfg = SimConfig(2, 1.0, 1.0)
    assert tree.radius_reaches(cfg, 0.0, np.random.default_rng(0))
    assert not tree.radius_reaches(cfg, 1.01, np.random.default_rng(0))


def test_hole_event_matches_full_frequency():
    cfg = SimConfig(2, 6.0, 1.0, 0)
    pts = geometry.lattice_in_ball(np.zeros(2), 0.4, 0.1)
    thr = 0.2
    lazy = sum(tree.hole_event(cfg, pts, thr, tree.trial_rng(51, i)).hole for i in range(3000))
    full = 0
    for i in range(3000):
        t = tree.grow(cfg, tree.trial_rng(52, i))
        full += bool((geometry.min_distances(pts, t.starts, t.ends) > thr).any())
    p = (lazy + full) / 6000
    assert 0.05 < p < 0.95
    se = math.sqrt(2 * p * (1 - p) / 3000)
    assert abs(lazy - full) / 3000 <= 4 * se


def test_hole_event_empty_lattice():
    assert tree.hole_event(SimConfig(2, 1.0, 1.0), np.empty((0, 2)), 0.1, np.random.default_rng(0)) \
        == tree.HoleCheck(False, 0, 0)
