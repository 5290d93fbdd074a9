"""The compiled and numpy kernels agree: exactly where they share an
algorithm and draw order, in law where they do not."""

import math
import os
import subprocess
import sys

import numpy as np
import pytest

from yuletree import _numba_kernels as nb
from yuletree import _numpy_kernels as npk
from yuletree import analytic, geometry, stats


def test_min_distances_agree(rng):
    pts = rng.normal(size=(200, 3))
    a = rng.normal(size=(50, 3))
    b = a + rng.normal(size=(50, 3))
    np.testing.assert_allclose(nb.min_distances(pts, a, b), npk.min_distances(pts, a, b), atol=1e-12)


@pytest.mark.parametrize("t, d, r", [(0.5, 0.6, 0.3), (2.0, 1.0, 0.3), (0.3, 0.6, 0.3)])
def test_miss_no_branch_agrees(t, d, r):
    want = analytic.miss_given_no_branch(t, d, r)
    assert nb.miss_no_branch(t, d, r) == pytest.approx(want, abs=1e-14)
    assert float(npk.miss_no_branch(t, d, r)) == pytest.approx(want, abs=1e-14)


@pytest.mark.parametrize("rate", [0.0, 1.0, 6.0])
def test_fe_solve_agrees(rate):
    args = (rate, 0.3, 0.05, 0.05, 20, 30, 16, 16, 0)
    qa, sa, _ = nb.fe_solve(*args)
    qb, sb, _ = npk.fe_solve(*args)
    assert sa == sb == nb.OK
    np.testing.assert_allclose(qa, qb, atol=1e-10)


def test_grow_agrees_in_law():
    ra = np.random.default_rng(1)
    rb = np.random.default_rng(2)
    A = [nb.grow(2, 1.5, 1.0, 10**6, ra) for _ in range(3000)]
    B = [npk.grow(2, 1.5, 1.0, 10**6, rb) for _ in range(3000)]
    rad = lambda out: np.linalg.norm(out[1], axis=1).max()  # noqa: E731
    assert stats.ks_two_sample([rad(o) for o in A], [rad(o) for o in B]).passed
    y = math.exp(-1.5)
    for out in (A, B):
        leaves = [int(o[4].sum()) for o in out]
        assert stats.chi_square_counts(leaves, lambda k: analytic.fs_pmf(y, k)).passed


@pytest.mark.parametrize("mod", [nb, npk])
def test_grow_budget_status(mod):
    *_, status, count = mod.grow(2, 8.0, 1.0, 30, np.random.default_rng(0))
    assert status == mod.BUDGET and count > 30


def test_cover_agrees_in_law():
    pts = geometry.hausdorff_grid(np.zeros(2), 0.4, 0.05)
    pt = geometry.build_point_tree(pts, leaf_size=8)
    n = len(pts)

    def run(mod, seed, prune):
        r = np.random.default_rng(seed)
        out = []
        for _ in range(500):
            m, _, status = mod.cover(2, 4.0, 1.0, pt.points, np.zeros(n), np.full(n, np.inf), np.zeros(2),
                                     0.4, pt.center, pt.radius, pt.left, pt.right, pt.lo, pt.hi, 10**6,
                                     prune, r)
            assert status == mod.OK
            out.append(m.max())
        return out

    ref = run(npk, 3, False)
    assert stats.ks_two_sample(run(nb, 4, True), ref).passed
    assert stats.ks_two_sample(run(nb, 5, False), ref).passed


def test_reach_radius_agrees():
    ra, rb = np.random.default_rng(6), np.random.default_rng(7)
    a = sum(nb.reach_radius(2, 3.0, 1.0, 0.7, 10**6, ra)[0] for _ in range(3000))
    b = sum(npk.reach_radius(2, 3.0, 1.0, 0.7, 10**6, rb)[0] for _ in range(3000))
    p = (a + b) / 6000
    assert abs(a - b) / 3000 <= 4 * math.sqrt(2 * p * (1 - p) / 3000)


def test_branch_displacement_agrees():
    a = nb.branch_max_displacement(2.0, 1.0, 3, 5000, np.random.default_rng(8))
    b = npk.branch_max_displacement(2.0, 1.0, 3, 5000, np.random.default_rng(9))
    # an atom at 1 for the no-turn paths; round away float noise before comparing
    assert stats.ks_two_sample(np.round(a, 9), np.round(b, 9)).passed


def _backend_in_subprocess(value):
    env = dict(os.environ, YULETREE_BACKEND=value)
    code = ("import yuletree, numpy as np; from yuletree import tree; "
            "t = tree.grow(tree.SimConfig(2, 1.0, 1.0), np.random.default_rng(0)); "
            "print(yuletree.BACKEND, t.leaf_count == t.branch_point_count + 1)")
    return subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)


@pytest.mark.parametrize("value", ["numpy", "numba"])
def test_env_flag_selects_backend(value):
    res = _backend_in_subprocess(value)
    assert res.returncode == 0, res.stderr
    assert res.stdout.split() == [value, "True"]


def test_env_flag_rejects_unknown():
    res = _backend_in_subprocess("fortran")
    assert res.returncode != 0 and "YULETREE_BACKEND" in res.stderr
