"""A single branch of the tree and its projection walk.

A branch is a unit-speed path from the origin that turns to a fresh uniform
direction at the jumps of a rate-``rate`` Poisson process. Two samplers are
provided: ``grow_branch`` draws the number of turns and then their times,
``grow_branch_sequential`` draws the inter-turn gaps one by one. The walk
``X_k = sum_{i<=k} t_i nu_i`` records the positions after whole gaps and is
coupled to the sequential branch through shared draws.
"""

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from ._io import text_out
from .geometry import _check_dim, sample_directions


@dataclass(frozen=True)
class BranchPath:
    """Piecewise-linear path: direction ``directions[i]`` is followed between
    turn ``i`` and turn ``i + 1`` (turn 0 is the start, the last piece stops
    at ``horizon``)."""

    turn_times: np.ndarray
    directions: np.ndarray
    horizon: float

    def __post_init__(self):
        tt = np.asarray(self.turn_times, float).reshape(-1)
        dirs = np.asarray(self.directions, float)
        if dirs.ndim != 2 or len(dirs) != len(tt) + 1:
            raise ValueError("need one more direction than turn times")
        if np.any(np.diff(tt) <= 0) or (len(tt) and (tt[0] <= 0 or tt[-1] > self.horizon)):
            raise ValueError("turn times must increase strictly inside (0, horizon]")
        object.__setattr__(self, "turn_times", tt)
        object.__setattr__(self, "directions", dirs)

    @property
    def dim(self):
        return self.directions.shape[1]

    @property
    def n_turns(self):
        return len(self.turn_times)

    @property
    def breakpoints(self):
        """Times ``0, t_1*, ..., t_N*, horizon``."""
        return np.concatenate([[0.0], self.turn_times, [self.horizon]])

    @property
    def vertices(self):
        """Positions at :attr:`breakpoints`."""
        gaps = np.diff(self.breakpoints)
        steps = gaps[:, None] * self.directions
        return np.vstack([np.zeros((1, self.dim)), np.cumsum(steps, axis=0)])

    @property
    def endpoint(self):
        return self.vertices[-1]

    def position(self, s):
        """Location of the path at time ``s`` in ``[0, horizon]``."""
        if not 0 <= s <= self.horizon:
            raise ValueError("s outside [0, horizon]")
        bp = self.breakpoints
        k = min(int(np.searchsorted(bp, s, side="right")) - 1, len(self.directions) - 1)
        return self.vertices[k] + (s - bp[k]) * self.directions[k]

    def to_csv(self, path):
        """Write ``turn_index,time,x0..`` for the start, each turn and the end."""
        with text_out(path) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["turn_index", "time"] + [f"x{j}" for j in range(self.dim)])
            for i, (t, x) in enumerate(zip(self.breakpoints, self.vertices)):
                w.writerow([i, repr(float(t))] + [repr(float(v)) for v in x])


def _check(rate, horizon):
    if not rate >= 0:
        raise ValueError("rate must be >= 0")
    if not horizon > 0:
        raise ValueError("horizon must be > 0")


def grow_branch(rate, horizon, rng, dim=2):
    """Branch with a ``Poisson(rate * horizon)`` number of uniformly placed turns."""
    _check(rate, horizon)
    dim = _check_dim(dim)
    n = int(rng.poisson(rate * horizon)) if rate > 0 else 0
    times = np.sort(rng.random(n) * horizon)
    # ties have probability zero but would break strict ordering
    times = np.unique(times[times > 0])
    return BranchPath(times, sample_directions(dim, len(times) + 1, rng), float(horizon))


def grow_branch_sequential(rate, horizon, rng, dim=2):
    """Branch with i.i.d. ``Exp(rate)`` pieces, the last one cut at ``horizon``."""
    _check(rate, horizon)
    dim = _check_dim(dim)
    times = []
    s = 0.0
    while rate > 0:
        s += rng.exponential(1.0 / rate)
        if s >= horizon:
            break
        times.append(s)
    return BranchPath(np.array(times), sample_directions(dim, len(times) + 1, rng), float(horizon))


def max_displacement(path):
    """``max_s |B(s)|``, attained at a breakpoint."""
    return float(np.linalg.norm(path.vertices, axis=1).max())


def max_displacement_sample(rate, horizon, n, rng, dim=2):
    """``n`` independent values of :func:`max_displacement` (compiled loop)."""
    _check(rate, horizon)
    return kernels.branch_max_displacement(float(rate), float(horizon), _check_dim(dim), int(n), rng)


def branch_from_tree(tree):
    """The root-to-leaf path of ``tree`` that always follows the first child."""
    idx = tree.first_child_path()
    v = tree.ends[idx] - tree.starts[idx]
    dirs = v / np.linalg.norm(v, axis=1)[:, None]
    turns = (tree.birth[idx] + np.linalg.norm(v, axis=1))[:-1]
    return BranchPath(turns, dirs, tree.horizon)


# --- projection walk ------------------------------------------------------------

@dataclass(frozen=True)
class Walk:
    """Partial sums ``X_0..X_kmax`` of ``gaps[i] * directions[i]``."""

    gaps: np.ndarray
    directions: np.ndarray

    @property
    def k_max(self):
        return len(self.gaps) - 1

    @property
    def steps(self):
        return np.cumsum(self.gaps[:, None] * self.directions, axis=0)

    @property
    def turn_times(self):
        return np.cumsum(self.gaps)


def sample_walk(rate, k, rng, dim=2):
    if rate <= 0:
        raise ValueError("the walk needs rate > 0")
    gaps = rng.exponential(1.0 / rate, k + 1)
    return Walk(gaps, sample_directions(dim, k + 1, rng))


def coupled(rate, horizon, k, rng, dim=2):
    """A walk of ``k + 1`` pieces and the sequential branch built from the
    same gaps and directions (extra pieces are drawn if the walk ends
    before ``horizon``)."""
    walk = sample_walk(rate, k, rng, dim)
    gaps = list(walk.gaps)
    dirs = list(walk.directions)
    while sum(gaps) < horizon:
        gaps.append(rng.exponential(1.0 / rate))
        dirs.append(sample_directions(dim, 1, rng)[0])
    cum = np.cumsum(gaps)
    n_turns = int(np.searchsorted(cum, horizon, side="left"))
    path = BranchPath(cum[:n_turns], np.array(dirs[:n_turns + 1]), float(horizon))
    return path, walk


def sample_walks(rate, dim, k, n, rng):
    """Array of shape ``(n, k + 1, dim)`` with ``X_0..X_k`` for ``n`` walks."""
    if rate <= 0:
        raise ValueError("the walk needs rate > 0")
    gaps = rng.exponential(1.0 / rate, (n, k + 1))
    dirs = sample_directions(dim, n * (k + 1), rng).reshape(n, k + 1, dim)
    return np.cumsum(gaps[:, :, None] * dirs, axis=1)


def walk_radii(steps):
    """``(R_X(k), R_X^n(k))`` for walks ``steps[..., j, n]``: the running max of
    the norm and of each coordinate's absolute value."""
    steps = np.asarray(steps, float)
    total = np.linalg.norm(steps, axis=-1).max(axis=-1)
    per = np.abs(steps).max(axis=-2)
    return total, per


class WalkMoments(NamedTuple):
    mean: np.ndarray
    mean_se: np.ndarray
    var: np.ndarray
    var_se: np.ndarray
    corr: np.ndarray
    corr_se: float
    increment_mean: np.ndarray
    increment_mean_se: np.ndarray
    increment_past_cov: np.ndarray
    increment_past_cov_se: np.ndarray
    n: int


def walk_var_exact(rate, dim, k):
    """``Var X_k^n = 2(k+1)/(dim rate^2)``."""
    return 2.0 * (k + 1) / (dim * rate * rate)


def walk_moments(rate, dim, k, n_trials, rng):
    """Monte Carlo moments of ``X_k`` with standard errors.

    ``increment_past_cov[j, n]`` is the covariance of coordinate ``n`` of the
    last increment ``X_k - X_{k-1}`` with that of increment ``j + 1``
    (``j < k - 1``). ``corr`` is the coordinate correlation matrix of ``X_k``.
    """
    if k < 0 or n_trials < 1000:
        raise ValueError("need k >= 0 and n_trials >= 1000")
    x = sample_walks(rate, dim, k, n_trials, rng)
    xk = x[:, -1, :]
    n = n_trials
    mean = xk.mean(axis=0)
    c = xk - mean
    var = (c ** 2).mean(axis=0) * n / (n - 1)
    m4 = (c ** 4).mean(axis=0)
    var_se = np.sqrt(np.maximum(m4 - var ** 2, 0.0) / n)
    corr = np.corrcoef(xk, rowvar=False) if dim > 1 else np.ones((1, 1))
    inc = np.diff(x, axis=1)
    if k >= 1:
        last = inc[:, -1, :]
        inc_mean = last.mean(axis=0)
        inc_se = last.std(axis=0, ddof=1) / math.sqrt(n)
        past = inc[:, :-1, :]
        prod = (past - past.mean(axis=0)) * (last - inc_mean)[:, None, :]
        cov = prod.mean(axis=0)
        cov_se = prod.std(axis=0, ddof=1) / math.sqrt(n)
    else:
        inc_mean = inc_se = np.zeros(dim)
        cov = cov_se = np.zeros((0, dim))
    return WalkMoments(mean, xk.std(axis=0, ddof=1) / math.sqrt(n), var, var_se, np.atleast_2d(corr),
                       1.0 / math.sqrt(n), inc_mean, inc_se, cov, cov_se, n)
