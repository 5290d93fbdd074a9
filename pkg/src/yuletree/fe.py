"""Numerical solution of the planar miss-probability equation.

``q(t, d)`` is the probability that the tree grown to time ``t`` stays farther
than ``r`` from a point at distance ``d``. Conditioning on the first branching
time ``s`` and direction ``alpha`` gives

    q(t, d) = (rate / 2 pi) ∫∫ e^{-rate s} q(t - s, D(s, alpha))^2 ds dalpha
              + e^{-rate t} f(t, d),

with ``s`` running up to ``s0(alpha)`` inside the cone that points at the
disk and up to ``t`` outside it. ``q = 0`` for ``d <= r`` and ``q = 1`` for
``t < d - r``. The right side only needs ``q`` at earlier times, so the grid
is filled one time layer at a time.

Discretisation: trapezoid rules in ``alpha`` (``n_alpha`` nodes on each of the
two angular ranges) and in ``s`` (``n_s`` nodes on a mesh graded towards
``s = 0``), and bilinear interpolation in ``(t, d)``. The interpolated
quantity is ``q - e^{-rate t} f``, with the closed-form term added back at
each quadrature point, because that term carries the jump of ``q`` at
``(0, r)`` and the square-root edge along ``t = d - r``.
"""

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from ._io import text_out


class GridExtentError(RuntimeError):
    """Interpolation needed ``q`` beyond the largest grid distance."""

    def __init__(self, t, d, s, alpha):
        super().__init__(
            f"grid too short in d while solving at t={t:.6g}, d={d:.6g} "
            f"(s={s:.6g}, alpha={alpha:.6g}); increase d_max")
        self.t, self.d, self.s, self.alpha = t, d, s, alpha


class GridConfigError(ValueError):
    """Two grids cannot be compared."""


@dataclass(frozen=True)
class FeGrid:
    rate: float
    r: float
    dt: float
    dd: float
    q: np.ndarray
    n_alpha: int
    n_s: int
    sweeps: int

    @property
    def t_grid(self):
        return np.arange(self.q.shape[0]) * self.dt

    @property
    def d_grid(self):
        return np.arange(self.q.shape[1]) * self.dd

    @property
    def t_max(self):
        return (self.q.shape[0] - 1) * self.dt

    @property
    def d_max(self):
        return (self.q.shape[1] - 1) * self.dd

    def at(self, t, d):
        """``q`` at a grid node; ``t`` and ``d`` must be multiples of the steps."""
        i = int(round(t / self.dt))
        j = int(round(d / self.dd))
        if abs(i * self.dt - t) > 1e-9 * max(1.0, t) or abs(j * self.dd - d) > 1e-9 * max(1.0, d):
            raise ValueError(f"({t}, {d}) is not a grid node")
        return float(self.q[i, j])

    def hit(self, t, d):
        return 1.0 - self.at(t, d)

    def to_csv(self, path):
        """Write a ``# key=value`` metadata line followed by ``t,d,q`` rows."""
        meta = {"rate": self.rate, "r": self.r, "tmax": self.t_max, "dmax": self.d_max,
                "dt": self.dt, "dd": self.dd, "nalpha": self.n_alpha, "ns": self.n_s,
                "sweeps": self.sweeps}
        with text_out(path) as fh:
            fh.write("# " + " ".join(f"{k}={v!r}" for k, v in meta.items()) + "\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "d", "q"])
            for i, t in enumerate(self.t_grid):
                for j, d in enumerate(self.d_grid):
                    w.writerow([repr(float(t)), repr(float(d)), repr(float(self.q[i, j]))])


def _steps(extent, h):
    n = extent / h
    k = int(round(n))
    if k < 1 or abs(n - k) > 1e-9 * max(1.0, n):
        raise ValueError(f"extent {extent} is not a whole number of steps {h}")
    return k


def solve(rate, r, t_max, d_max, dt, dd=None, n_alpha=32, n_s=32, sweeps=0):
    """Solve on ``[0, t_max] x [0, d_max]`` with steps ``dt`` and ``dd``.

    ``dd`` defaults to ``dt``; equal steps with ``r`` a multiple of the step
    keep grid nodes off the edge ``t = d - r``. ``sweeps`` re-evaluates each
    layer that many extra times, refreshing the values it uses from the layer
    itself (only needed very close to ``s = 0``). Needs
    ``d_max >= t_max + r`` plus two steps so that interpolation stays on the
    grid; otherwise :class:`GridExtentError` names the offending point.
    """
    if not r > 0:
        raise ValueError("r must be > 0")
    if not rate >= 0:
        raise ValueError("rate must be >= 0")
    dd = dt if dd is None else dd
    if not (dt > 0 and dd > 0 and t_max > 0 and d_max > r):
        raise ValueError("need positive steps, t_max > 0 and d_max > r")
    if n_alpha < 16 or n_s < 16:
        raise ValueError("quadrature orders must be >= 16")
    if sweeps < 0:
        raise ValueError("sweeps must be >= 0")
    nt = _steps(t_max, dt)
    nd = _steps(d_max, dd)
    q, status, err = kernels.fe_solve(float(rate), float(r), float(dt), float(dd), nt, nd,
                                      int(n_alpha), int(n_s), int(sweeps))
    if status == kernels.GRID_EXTENT:
        raise GridExtentError(*(float(v) for v in err[1:5]))
    q = np.ascontiguousarray(q)
    q.setflags(write=False)
    return FeGrid(float(rate), float(r), float(dt), float(dd), q, int(n_alpha), int(n_s), int(sweeps))


def default_d_max(t_max, r, h):
    """Smallest ``d_max`` on the ``h`` grid that keeps interpolation in range."""
    return (math.ceil((t_max + r) / h - 1e-9) + 3) * h


class Refinement(NamedTuple):
    discrepancy: float
    where: tuple
    n_shared: int


def limit_consistency(grid, finer):
    """Largest ``|q - q_finer|`` over nodes the two grids share.

    ``finer`` must use half the steps of ``grid`` with the same ``r``, rate
    and extents (``d_max`` may differ by a few coarse steps; only the common
    range is compared).
    """
    same = math.isclose(grid.r, finer.r) and math.isclose(grid.rate, finer.rate)
    halved = math.isclose(finer.dt * 2, grid.dt) and math.isclose(finer.dd * 2, grid.dd)
    identical = math.isclose(finer.dt, grid.dt) and math.isclose(finer.dd, grid.dd)
    if not same or not (halved or identical) or not math.isclose(grid.t_max, finer.t_max):
        raise GridConfigError("grids differ in r, rate, t extent or step ratio")
    step = 1 if identical else 2
    sub = finer.q[::step, ::step]
    nt = min(grid.q.shape[0], sub.shape[0])
    nd = min(grid.q.shape[1], sub.shape[1])
    diff = np.abs(grid.q[:nt, :nd] - sub[:nt, :nd])
    i, j = np.unravel_index(int(np.argmax(diff)), diff.shape)
    return Refinement(float(diff[i, j]), (float(i * grid.dt), float(j * grid.dd)), int(diff.size))


class Drift(NamedTuple):
    rates: tuple
    values: tuple
    decreasing: bool
    toward: str


def rate_sweep(rates, t, d, r, h, n_alpha=32, n_s=32):
    """``q(t, d)`` for each rate and whether it moves monotonically to 0 or 1."""
    vals = []
    for lam in rates:
        g = solve(lam, r, t, default_d_max(t, r, h), h, h, n_alpha, n_s)
        vals.append(g.at(t, d))
    dec = all(b < a for a, b in zip(vals, vals[1:]))
    inc = all(b > a for a, b in zip(vals, vals[1:]))
    toward = "0" if dec else ("1" if inc else "none")
    return Drift(tuple(rates), tuple(vals), dec, toward)
