"""Growth of the Yule tree and per-trial statistics.

A tree starts with one leaf at the origin. Every leaf grows at unit speed in
its own uniform direction and splits into two after an ``Exp(rate)`` clock.
Leaves are processed depth-first from a stack, drawing a direction and then a
clock for each new segment, so a given random stream always yields the same
tree.
"""

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import geometry, kernels
from ._io import text_out
from ._backend import thread_count

DEFAULT_MAX_SEGMENTS = 10**7


class BudgetExceeded(RuntimeError):
    """Growth needed more segments than the configured cap."""

    def __init__(self, partial_count, limit):
        super().__init__(f"segment budget {limit} exceeded ({partial_count} segments pending or built)")
        self.partial_count = int(partial_count)
        self.limit = int(limit)


@dataclass(frozen=True)
class SimConfig:
    dim: int
    rate: float
    horizon: float
    master_seed: int = 0
    max_segments: int = DEFAULT_MAX_SEGMENTS

    def __post_init__(self):
        geometry._check_dim(self.dim)
        if not (self.rate >= 0 and math.isfinite(self.rate)):
            raise ValueError(f"rate must be finite and >= 0, got {self.rate}")
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise ValueError(f"horizon must be finite and > 0, got {self.horizon}")
        if int(self.max_segments) != self.max_segments or self.max_segments < 1:
            raise ValueError(f"max_segments must be a positive integer, got {self.max_segments}")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must fit in 64 unsigned bits")

    @property
    def expected_segments(self):
        """Mean segment count ``2 e^{rate t} - 1``."""
        return 2.0 * math.exp(min(self.rate * self.horizon, 700.0)) - 1.0

    def over_budget(self):
        return self.expected_segments > self.max_segments


class Leaf(NamedTuple):
    position: np.ndarray
    direction: np.ndarray
    segment: int


class BranchPoint(NamedTuple):
    position: np.ndarray
    time: float


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class Tree:
    """An immutable grown tree.

    Segment ``k`` runs from ``starts[k]`` to ``ends[k]``, was born at
    ``birth[k]`` and hangs off segment ``parent[k]`` (``-1`` for the root).
    ``is_leaf[k]`` marks segments still growing at the horizon; every other
    segment ends at a branch point and has exactly two children.
    """

    def __init__(self, starts, ends, birth, parent, is_leaf, horizon):
        self.starts = _frozen(np.asarray(starts, float))
        self.ends = _frozen(np.asarray(ends, float))
        self.birth = _frozen(np.asarray(birth, float))
        self.parent = _frozen(np.asarray(parent, np.int64))
        self.is_leaf = _frozen(np.asarray(is_leaf, bool))
        self.horizon = float(horizon)

    @property
    def dim(self):
        return self.starts.shape[1]

    def __len__(self):
        return len(self.birth)

    @property
    def lengths(self):
        return np.linalg.norm(self.ends - self.starts, axis=1)

    def segments(self):
        return [geometry.Segment(self.starts[k], self.ends[k], float(self.birth[k]))
                for k in range(len(self))]

    @property
    def leaves(self):
        out = []
        for k in np.flatnonzero(self.is_leaf):
            v = self.ends[k] - self.starts[k]
            n = np.linalg.norm(v)
            out.append(Leaf(self.ends[k], v / n if n > 0 else v, int(k)))
        return out

    @property
    def branch_points(self):
        inner = np.flatnonzero(~self.is_leaf)
        death = self.birth + self.lengths
        return [BranchPoint(self.ends[k], float(death[k])) for k in inner]

    @property
    def leaf_count(self):
        return int(self.is_leaf.sum())

    @property
    def branch_point_count(self):
        return len(self) - self.leaf_count

    @property
    def radius(self):
        return radius(self)

    @property
    def total_length(self):
        return float(self.lengths.sum())

    def min_distance(self, x):
        return min_distance(self, x)

    def children(self, k):
        return np.flatnonzero(self.parent == k)

    def first_child_path(self):
        """Segment indices from the root to a leaf, always taking the child
        with the smaller index."""
        first = np.full(len(self), -1, np.int64)
        for k in range(len(self) - 1, 0, -1):
            first[self.parent[k]] = k
        path = [0]
        while first[path[-1]] >= 0:
            path.append(int(first[path[-1]]))
        return np.array(path, np.int64)

    def to_csv(self, path):
        """Write ``segment_id,parent_id,birth_time,x0..,y0..``."""
        d = self.dim
        with text_out(path) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["segment_id", "parent_id", "birth_time"]
                       + [f"x{j}" for j in range(d)] + [f"y{j}" for j in range(d)])
            for k in range(len(self)):
                w.writerow([k, int(self.parent[k]), repr(float(self.birth[k]))]
                           + [repr(float(v)) for v in self.starts[k]]
                           + [repr(float(v)) for v in self.ends[k]])


def grow(config, rng):
    """Sample the tree up to ``config.horizon`` from the stream ``rng``."""
    starts, ends, birth, parent, leaf, status, count = kernels.grow(
        config.dim, float(config.rate), float(config.horizon), int(config.max_segments), rng)
    if status != kernels.OK:
        raise BudgetExceeded(count, config.max_segments)
    return Tree(starts, ends, birth, parent, leaf, config.horizon)


def radius(tree):
    """``max |x|`` over the tree, attained at a segment endpoint."""
    if len(tree) == 0:
        return 0.0
    return float(np.sqrt(np.einsum("ij,ij->i", tree.ends, tree.ends).max()))


def min_distance(tree, x):
    x = np.asarray(x, float).reshape(1, -1)
    return float(geometry.min_distances(x, tree.starts, tree.ends)[0])


def neighbourhood_area(tree, r, n_points, rng):
    """Monte Carlo area of ``{x : dist(x, tree) <= r}`` for a planar tree.

    Points are uniform in the bounding box of the tree widened by ``r``.
    Returns ``(area, standard error)``.
    """
    if tree.dim != 2:
        raise ValueError("area estimate is for dim 2")
    lo = np.minimum(tree.starts.min(axis=0), tree.ends.min(axis=0)) - r
    hi = np.maximum(tree.starts.max(axis=0), tree.ends.max(axis=0)) + r
    box = float(np.prod(hi - lo))
    pts = lo + (hi - lo) * rng.random((int(n_points), 2))
    inside = geometry.min_distances(pts, tree.starts, tree.ends) <= r
    f = inside.mean()
    return box * f, box * math.sqrt(f * (1 - f) / len(pts))


# --- trials ---------------------------------------------------------------------

def child_seed(master_seed, index):
    """64-bit seed of trial ``index``, a pure function of the pair."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, np.uint64)[0])


def trial_rng(master_seed, index):
    return np.random.default_rng(child_seed(master_seed, index))


@dataclass(frozen=True)
class TrialSummary:
    trial: int
    seed: int
    radius: float
    total_length: float
    leaf_count: int
    branch_point_count: int
    hits: tuple = ()


@dataclass(frozen=True)
class FailedTrial:
    trial: int
    seed: int
    partial_count: int


@dataclass
class TrialBatch:
    config: SimConfig
    probes: list
    summaries: list = field(default_factory=list)
    failed: list = field(default_factory=list)

    def __len__(self):
        return len(self.summaries)

    @property
    def radii(self):
        return np.array([s.radius for s in self.summaries])

    @property
    def lengths(self):
        return np.array([s.total_length for s in self.summaries])

    @property
    def leaf_counts(self):
        return np.array([s.leaf_count for s in self.summaries], np.int64)

    def hits(self, k):
        return np.array([s.hits[k] for s in self.summaries], bool)

    def hit_fraction(self, k):
        h = self.hits(k)
        return float(h.mean()) if len(h) else math.nan

    def to_csv(self, path):
        """Write ``trial,seed,radius,total_length,leaf_count,branch_points[,hit_k..]``."""
        with text_out(path) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trial", "seed", "radius", "total_length", "leaf_count", "branch_points"]
                       + [f"hit_{k}" for k in range(len(self.probes))])
            for s in self.summaries:
                w.writerow([s.trial, s.seed, repr(s.radius), repr(s.total_length),
                            s.leaf_count, s.branch_point_count] + [int(h) for h in s.hits])


def _normalise_probes(probes, dim):
    out = []
    for x, r in probes:
        x = np.asarray(x, float).reshape(-1)
        if x.shape[0] != dim:
            raise ValueError(f"probe {x} does not have dimension {dim}")
        if r < 0:
            raise ValueError("probe radius must be >= 0")
        out.append((x, float(r)))
    return out


def _one_trial(config, index, probes):
    seed = child_seed(config.master_seed, index)
    try:
        tree = grow(config, np.random.default_rng(seed))
    except BudgetExceeded as exc:
        return FailedTrial(index, seed, exc.partial_count)
    hits = ()
    if probes:
        xs = np.array([p[0] for p in probes])
        rs = np.array([p[1] for p in probes])
        hits = tuple(bool(h) for h in geometry.min_distances(xs, tree.starts, tree.ends) <= rs)
    return TrialSummary(index, seed, radius(tree), tree.total_length, tree.leaf_count,
                        tree.branch_point_count, hits)


def run_trials(config, n_trials, probes=()):
    """Grow ``n_trials`` independent trees and summarise each one.

    Trial ``i`` is grown from ``trial_rng(config.master_seed, i)``. A trial
    that exceeds the segment cap is recorded in ``failed`` and left out of
    the summaries. Probe ``(x, r)`` is hit when the tree comes within the
    closed distance ``r`` of ``x``. Results are in trial order whatever the
    number of worker threads (``YULE_THREADS``).
    """
    if int(n_trials) != n_trials or n_trials < 1:
        raise ValueError("n_trials must be a positive integer")
    probes = _normalise_probes(probes, config.dim)
    workers = thread_count()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda i: _one_trial(config, i, probes), range(n_trials)))
    else:
        results = [_one_trial(config, i, probes) for i in range(n_trials)]
    batch = TrialBatch(config, probes)
    for res in results:
        (batch.failed if isinstance(res, FailedTrial) else batch.summaries).append(res)
    return batch


# --- lazily grown statistics ------------------------------------------------------

def radius_reaches(config, target, rng):
    """Whether ``R >= target``, growing only the parts of the tree that could
    still reach that far and stopping at the first hit."""
    reached, nodes, status = kernels.reach_radius(
        config.dim, float(config.rate), float(config.horizon), float(target),
        int(config.max_segments), rng)
    if status != kernels.OK:
        raise BudgetExceeded(nodes, config.max_segments)
    return bool(reached)


class HausdorffEstimate(NamedTuple):
    value: float
    empty: bool
    n_grid: int
    censored: bool
    segments: int


def hausdorff_lazy(config, radius_, grid_step, rng, floor=0.0, center=None, point_tree=None):
    """Grid estimate of the Hausdorff distance between ``tree ∩ B`` and ``B``.

    Same estimator as :func:`geometry.hausdorff_to_ball` but the tree is grown
    on demand: a subtree is skipped once it cannot bring any grid point closer
    than its current distance. Values at or below ``floor`` are not resolved;
    the estimate is then ``floor`` with ``censored=True``. With ``floor=0``
    the result equals the full computation on the same law.
    """
    center = np.zeros(config.dim) if center is None else np.asarray(center, float)
    if point_tree is None:
        point_tree = geometry.build_point_tree(
            geometry.hausdorff_grid(center, radius_, grid_step), leaf_size=8)
    n = len(point_tree.points)
    if n == 0:
        return HausdorffEstimate(0.0, False, 0, False, 0)
    m, nodes, status = kernels.cover(
        config.dim, float(config.rate), float(config.horizon), point_tree.points,
        np.full(n, float(floor)), np.full(n, np.inf), center, float(radius_),
        point_tree.center, point_tree.radius, point_tree.left, point_tree.right,
        point_tree.lo, point_tree.hi, int(config.max_segments), True, rng)
    if status != kernels.OK:
        raise BudgetExceeded(nodes, config.max_segments)
    top = float(m.max())
    if not math.isfinite(top):
        return HausdorffEstimate(float(radius_), True, n, False, int(nodes))
    if top <= floor:
        return HausdorffEstimate(float(floor), False, n, True, int(nodes))
    return HausdorffEstimate(top, False, n, False, int(nodes))


class HoleCheck(NamedTuple):
    hole: bool
    n_points: int
    segments: int


def hole_event(config, points, threshold, rng, point_tree=None):
    """Whether some point of ``points`` is farther than ``threshold`` from the tree.

    Growth stops exploring a subtree once every point it could help is
    already within ``threshold``.
    """
    points = np.asarray(points, float).reshape(-1, config.dim)
    if len(points) == 0:
        return HoleCheck(False, 0, 0)
    if point_tree is None:
        point_tree = geometry.build_point_tree(points, leaf_size=8)
    n = len(point_tree.points)
    # start every point just above the threshold; any contact at or below it settles the point
    m0 = np.full(n, threshold * (1 + 1e-9) + 1e-300)
    m, nodes, status = kernels.cover(
        config.dim, float(config.rate), float(config.horizon), point_tree.points,
        np.full(n, float(threshold)), m0, np.zeros(config.dim), math.inf,
        point_tree.center, point_tree.radius, point_tree.left, point_tree.right,
        point_tree.lo, point_tree.hi, int(config.max_segments), True, rng)
    if status != kernels.OK:
        raise BudgetExceeded(nodes, config.max_segments)
    return HoleCheck(bool((m > threshold).any()), n, int(nodes))
