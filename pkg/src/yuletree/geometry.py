"""Vector primitives, segment distances, lattices and the grid Hausdorff estimator.

Points are plain ``numpy`` arrays of shape ``(D,)``; collections of points or
segments are stacked into ``(n, D)`` arrays. The estimator for the distance
between a segment set and a ball works on the lattice
``center + grid_step * Z^D`` restricted to ``B(center, radius - grid_step/2)``.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels


class InvalidDimension(ValueError):
    """Raised when a dimension is not a positive integer."""


@dataclass(frozen=True)
class Segment:
    start: np.ndarray
    end: np.ndarray
    birth_time: float = 0.0

    @property
    def length(self):
        return float(np.linalg.norm(np.asarray(self.end) - np.asarray(self.start)))


def _check_dim(dim):
    if isinstance(dim, bool) or int(dim) != dim or dim < 1:
        raise InvalidDimension(f"dimension must be a positive integer, got {dim!r}")
    return int(dim)


def sample_direction(dim, rng):
    """One uniform unit vector in R^dim (normalized Gaussian; ±1 when dim is 1)."""
    dim = _check_dim(dim)
    return sample_directions(dim, 1, rng)[0]


def sample_directions(dim, n, rng):
    """``n`` independent uniform unit vectors as an ``(n, dim)`` array."""
    from ._numpy_kernels import directions

    return directions(rng, _check_dim(dim), int(n))


def point_segment_distance(p, seg):
    """Euclidean distance from ``p`` to the closed segment ``seg``."""
    p = np.asarray(p, float)
    a = np.asarray(seg.start, float)
    b = np.asarray(seg.end, float)
    v = b - a
    vv = float(v @ v)
    u = 0.0 if vv == 0.0 else min(1.0, max(0.0, float((p - a) @ v) / vv))
    return float(np.linalg.norm(p - a - u * v))


def min_distances(points, starts, ends):
    """Distance from each row of ``points`` to the union of segments (inf if none)."""
    points = np.ascontiguousarray(points, float)
    starts = np.ascontiguousarray(starts, float).reshape(-1, points.shape[1])
    ends = np.ascontiguousarray(ends, float).reshape(-1, points.shape[1])
    return kernels.min_distances(points, starts, ends)


def clip_segments(starts, ends, center, radius):
    """Exact intersection of each segment with the closed ball ``B(center, radius)``.

    Returns the clipped ``(starts, ends)``; segments missing the ball are dropped.
    """
    from ._numpy_kernels import clip_segments as _clip

    starts = np.asarray(starts, float)
    ends = np.asarray(ends, float)
    return _clip(starts, ends, np.asarray(center, float), float(radius))


def lattice_in_ball(center, radius, step, open_ball=False):
    """Points of ``center + step * Z^D`` inside ``B(center, radius)``.

    The ball is closed by default. Returns an ``(n, D)`` array, possibly empty.
    """
    center = np.asarray(center, float)
    dim = _check_dim(center.shape[0])
    if step <= 0:
        raise ValueError("step must be positive")
    if radius < 0 or (open_ball and radius == 0):
        return np.empty((0, dim))
    k = int(np.floor(radius / step + 1e-12))
    axis = np.arange(-k, k + 1) * step
    grid = np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    r2 = np.einsum("ij,ij->i", grid, grid)
    lim = radius * radius
    keep = r2 < lim if open_ball else r2 <= lim * (1 + 1e-12)
    return grid[keep] + center


def hausdorff_grid(center, radius, grid_step):
    """Lattice used by the Hausdorff estimator.

    Lattice points within ``radius + grid_step * sqrt(D) / 2`` are projected
    onto the closed ball; projection is nonexpansive, so every ball point is
    within ``grid_step * sqrt(D) / 2`` of the result.
    """
    center = np.asarray(center, float)
    reach = 0.5 * grid_step * math.sqrt(center.shape[0])
    pts = lattice_in_ball(center, radius + reach, grid_step)
    off = pts - center
    norm = np.linalg.norm(off, axis=1)
    out = norm > radius
    pts[out] = center + off[out] * (radius / norm[out])[:, None]
    return pts


class PointTree(NamedTuple):
    """Bounding-ball hierarchy over a point set, flattened for the kernels.

    ``points`` are reordered so every node owns the contiguous rows
    ``lo[k]:hi[k]``; ``order`` maps them back to the input rows. Leaves have
    ``left == right == -1``.
    """

    points: np.ndarray
    order: np.ndarray
    center: np.ndarray
    radius: np.ndarray
    left: np.ndarray
    right: np.ndarray
    lo: np.ndarray
    hi: np.ndarray


def build_point_tree(points, leaf_size=4):
    points = np.asarray(points, float)
    n, dim = points.shape
    order = np.arange(n)
    cen, rad, left, right, lo, hi = [], [], [], [], [], []

    def node(a, b):
        k = len(cen)
        block = points[order[a:b]]
        mid = 0.5 * (block.min(axis=0) + block.max(axis=0)) if b > a else np.zeros(dim)
        cen.append(mid)
        rad.append(float(np.linalg.norm(block - mid, axis=1).max()) if b > a else 0.0)
        left.append(-1)
        right.append(-1)
        lo.append(a)
        hi.append(b)
        if b - a > leaf_size:
            axis = int(np.argmax(np.ptp(block, axis=0)))
            sub = np.argsort(block[:, axis], kind="stable")
            order[a:b] = order[a:b][sub]
            m = (a + b) // 2
            left[k] = node(a, m)
            right[k] = node(m, b)
        return k

    node(0, n)
    return PointTree(
        np.ascontiguousarray(points[order]), order,
        np.ascontiguousarray(np.array(cen).reshape(-1, dim)), np.array(rad),
        np.array(left, np.int64), np.array(right, np.int64),
        np.array(lo, np.int64), np.array(hi, np.int64),
    )


class HausdorffEstimate(NamedTuple):
    value: float
    empty: bool
    n_grid: int


def hausdorff_to_ball(segments, center, radius, grid_step):
    """Grid estimate of ``dist_H(S ∩ B, B)`` for a segment set ``S`` and ball ``B``.

    ``segments`` is a list of :class:`Segment` or a ``(starts, ends)`` pair of
    arrays. Only the ball side of the Hausdorff distance is computed since the
    clipped set lies inside the ball. The estimate differs from the true value
    by at most ``grid_step * sqrt(D) / 2`` and never exceeds it. If no segment meets the ball the
    result is ``radius`` with ``empty=True``.
    """
    if radius <= 0 or grid_step <= 0:
        raise ValueError("radius and grid_step must be positive")
    center = np.asarray(center, float)
    _check_dim(center.shape[0])
    starts, ends = _as_arrays(segments, center.shape[0])
    grid = hausdorff_grid(center, radius, grid_step)
    a, b = clip_segments(starts, ends, center, radius)
    if len(a) == 0:
        return HausdorffEstimate(float(radius), True, len(grid))
    if len(grid) == 0:
        return HausdorffEstimate(0.0, False, 0)
    return HausdorffEstimate(float(min_distances(grid, a, b).max()), False, len(grid))


def _as_arrays(segments, dim):
    if isinstance(segments, tuple) and len(segments) == 2 and isinstance(segments[0], np.ndarray):
        return (np.asarray(segments[0], float).reshape(-1, dim),
                np.asarray(segments[1], float).reshape(-1, dim))
    if len(segments) == 0:
        return np.empty((0, dim)), np.empty((0, dim))
    starts = np.array([s.start for s in segments], float).reshape(-1, dim)
    ends = np.array([s.end for s in segments], float).reshape(-1, dim)
    return starts, ends
