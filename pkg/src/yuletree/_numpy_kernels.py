"""Pure-numpy kernels, selected with ``YULETREE_BACKEND=numpy``.

Same call signatures and return layouts as ``_numba_kernels``, vectorized
instead of looped. Trees are grown one generation at a time, so the random
stream is consumed in a different order than the compiled path: outputs agree
in law, not bit for bit. The lazy searches (``cover``, ``reach_radius``) grow
the whole tree and then answer exactly, so they only scale to moderate rates.
"""

import math

import numpy as np

OK = 0
BUDGET = 1
GRID_EXTENT = 2

_CHUNK = 1 << 21


def directions(rng, dim, n):
    if dim == 1:
        return np.where(rng.random(n) < 0.5, 1.0, -1.0)[:, None]
    g = rng.standard_normal((n, dim))
    norms = np.linalg.norm(g, axis=1)
    bad = norms == 0.0
    while bad.any():
        g[bad] = rng.standard_normal((int(bad.sum()), dim))
        norms[bad] = np.linalg.norm(g[bad], axis=1)
        bad = norms == 0.0
    return g / norms[:, None]


def draw_direction(rng, dim, out):
    out[:] = directions(rng, dim, 1)[0]


def grow(dim, rate, horizon, max_segments, rng):
    pos = np.zeros((1, dim))
    birth = np.zeros(1)
    parent = np.full(1, -1, np.int64)
    parts = []
    n = 0
    status = OK
    while len(birth):
        k = len(birth)
        if n + k > max_segments:
            status = BUDGET
            break
        nu = directions(rng, dim, k)
        tau = horizon - birth
        if rate > 0.0:
            e = rng.exponential(1.0 / rate, k)
            fire = e < tau
            ell = np.where(fire, e, tau)
        else:
            fire = np.zeros(k, bool)
            ell = tau
        end = pos + ell[:, None] * nu
        idx = np.arange(n, n + k)
        parts.append((pos, end, birth, parent, ~fire))
        n += k
        pos = np.repeat(end[fire], 2, axis=0)
        parent = np.repeat(idx[fire], 2)
        birth = np.repeat((birth + ell)[fire], 2)
    if parts:
        starts, ends, births, parents, leaves = (np.concatenate(c) for c in zip(*parts))
    else:
        starts = ends = np.empty((0, dim))
        births = np.empty(0)
        parents = np.empty(0, np.int64)
        leaves = np.empty(0, bool)
    pending = n + len(birth) if status == BUDGET else n
    return starts, ends, births, parents, leaves, status, pending


def min_distances(points, starts, ends):
    points = np.asarray(points, float)
    out = np.full(len(points), np.inf)
    if len(starts) == 0 or len(points) == 0:
        return out
    v = ends - starts
    vv = np.einsum("ij,ij->i", v, v)
    safe = np.where(vv > 0.0, vv, 1.0)
    step = max(1, _CHUNK // max(1, len(starts)))
    for lo in range(0, len(points), step):
        p = points[lo:lo + step, None, :]
        w = p - starts[None, :, :]
        u = np.einsum("psj,sj->ps", w, v) / safe
        u = np.clip(np.where(vv > 0.0, u, 0.0), 0.0, 1.0)
        diff = w - u[:, :, None] * v[None, :, :]
        out[lo:lo + step] = np.sqrt(np.einsum("psj,psj->ps", diff, diff)).min(axis=1)
    return out


def clip_segments(starts, ends, center, radius):
    """Clip segments to the closed ball; returns (starts, ends) of non-empty pieces."""
    if not np.isfinite(radius):
        return starts, ends
    v = ends - starts
    ell = np.linalg.norm(v, axis=1)
    nu = np.divide(v, ell[:, None], out=np.zeros_like(v), where=ell[:, None] > 0)
    w = starts - center
    b = np.einsum("ij,ij->i", w, nu)
    c = np.einsum("ij,ij->i", w, w) - radius * radius
    disc = b * b - c
    ok = disc >= 0.0
    sq = np.sqrt(np.where(ok, disc, 0.0))
    lo = np.maximum(-b - sq, 0.0)
    hi = np.minimum(-b + sq, ell)
    keep = ok & (lo <= hi)
    a = starts + lo[:, None] * nu
    z = starts + hi[:, None] * nu
    return a[keep], z[keep]


def cover(dim, rate, horizon, pts, floors, m0, clip_center, clip_radius,
          ncen, nrad, nleft, nright, nlo, nhi, max_nodes, prune, rng):
    # full tree, exact distances; floors and the point hierarchy are unused
    starts, ends, _, _, _, status, nodes = grow(dim, rate, horizon, max_nodes, rng)
    if status != OK:
        return np.array(m0, float), nodes, status
    a, z = clip_segments(starts, ends, clip_center, clip_radius)
    return np.minimum(m0, min_distances(pts, a, z)), nodes, OK


def reach_radius(dim, rate, horizon, target, max_nodes, rng):
    if target <= 0.0:
        return True, 0, OK
    _, ends, _, _, _, status, nodes = grow(dim, rate, horizon, max_nodes, rng)
    reached = bool(len(ends)) and float(np.linalg.norm(ends, axis=1).max()) >= target
    if status != OK and not reached:
        return False, nodes, status
    return reached, nodes, OK


def branch_max_displacement(rate, horizon, dim, n, rng):
    # Poisson-count construction: N ~ Po(rate*horizon), turn times i.i.d. uniform
    counts = rng.poisson(rate * horizon, n) if rate > 0.0 else np.zeros(n, np.int64)
    owner = np.repeat(np.arange(n), counts)
    times = rng.random(len(owner)) * horizon
    order = np.lexsort((times, owner))
    owner, times = owner[order], times[order]
    # append the horizon as the last breakpoint of every path
    owner = np.concatenate([owner, np.arange(n)])
    times = np.concatenate([times, np.full(n, horizon)])
    order = np.lexsort((times, owner))
    owner, times = owner[order], times[order]
    first = np.r_[True, owner[1:] != owner[:-1]]
    prev = np.r_[0.0, times[:-1]]
    gaps = np.where(first, times, times - prev)
    steps = gaps[:, None] * directions(rng, dim, len(gaps))
    csum = np.cumsum(steps, axis=0)
    starts = np.flatnonzero(first)
    offset = np.vstack([np.zeros((1, dim)), csum[starts[1:] - 1]])
    pos = csum - np.repeat(offset, np.diff(np.r_[starts, len(gaps)]), axis=0)
    return np.maximum.reduceat(np.linalg.norm(pos, axis=1), starts)


# --- connection-probability functional equation (2D) ---------------------

def miss_no_branch(t, d, r):
    seam = math.sqrt(d * d - r * r)
    if t >= seam:
        return 1.0 - math.asin(r / d) / math.pi
    c = min(1.0, max(-1.0, (d * d + t * t - r * r) / (2.0 * t * d)))
    return 1.0 - math.acos(c) / math.pi


def _free_term(rate, t, d, r):
    # e^{-rate t} f(t, d) with f = 1 out of reach; scalar or array inputs
    t = np.asarray(t, float)
    d = np.asarray(d, float)
    out = np.exp(-rate * t)
    inside = t > d - r
    if np.any(inside):
        f = np.vectorize(miss_no_branch, otypes=[float])(t[inside], d[inside], r)
        out = np.array(out, float)
        out[inside] *= f
    return out


def _interp(g, gprov, i_cur, tau, dist, rate, r, dt, dd, nd, tol):
    # only the remainder g = q - e^{-rate t} f is interpolated
    out = np.empty_like(tau)
    zero = dist <= r + tol
    one = ~zero & (tau <= dist - r + tol)
    mid = ~(zero | one)
    out[zero] = 0.0
    out[one] = 1.0
    if not mid.any():
        return out, None
    tm, dm = tau[mid], dist[mid]
    a = tm / dt
    i0 = np.clip(np.floor(a).astype(np.int64), 0, i_cur - 1)
    wa = a - i0
    b = dm / dd
    j0 = np.floor(b).astype(np.int64)
    over = j0 + 2 > nd
    if over.any():
        k = int(np.flatnonzero(over)[0])
        return out, (float(tm[k]), float(dm[k]))
    wb = b - j0
    layers = np.vstack([g[:i_cur], gprov[None, :]])
    v00, v10 = layers[i0, j0], layers[i0 + 1, j0]
    v01, v11 = layers[i0, j0 + 1], layers[i0 + 1, j0 + 1]
    left = j0 * dd <= r + tol
    if left.any():
        v00 = np.where(left, 2.0 * v01 - layers[i0, j0 + 2], v00)
        v10 = np.where(left, 2.0 * v11 - layers[i0 + 1, j0 + 2], v10)
    rem = (1.0 - wa) * ((1.0 - wb) * v00 + wb * v01) + wa * ((1.0 - wb) * v10 + wb * v11)
    out[mid] = np.clip(rem + _free_term(rate, tm, dm, r), 0.0, 1.0)
    return out, None


def _trap_weights(x):
    # composite trapezoid weights along the last axis
    w = np.zeros_like(x)
    dx = np.diff(x, axis=-1)
    w[..., :-1] += 0.5 * dx
    w[..., 1:] += 0.5 * dx
    return w


def _fe_node(g, gprov, i_cur, t, d, rate, r, dt, dd, nd, n_alpha, n_s, tol):
    if rate <= 0.0:
        return min(1.0, max(0.0, miss_no_branch(t, d, r))), None
    alpha0 = math.asin(min(r / d, 1.0))
    u = np.linspace(0.0, 1.0, n_s) ** 2
    acc = 0.0
    for lo, hi, near in ((0.0, alpha0, True), (alpha0, math.pi, False)):
        al = np.linspace(lo, hi, n_alpha)
        wa = _trap_weights(al)
        if near:
            rad = np.maximum(r * r - (d * np.sin(al)) ** 2, 0.0)
            s_hi = np.minimum(t, d * np.cos(al) - np.sqrt(rad))
        else:
            s_hi = np.full(n_alpha, t)
        s = s_hi[:, None] * u[None, :]
        dist = np.sqrt(np.maximum(d * d + s * s - 2.0 * d * s * np.cos(al)[:, None], 0.0))
        v, bad = _interp(g, gprov, i_cur, (t - s).ravel(), dist.ravel(), rate, r, dt, dd, nd, tol)
        if bad is not None:
            return 0.0, (t, d, t - bad[0], bad[1])
        f = np.exp(-rate * s) * v.reshape(s.shape) ** 2
        acc += float(wa @ (_trap_weights(s) * f).sum(axis=1))
    val = 2.0 * rate / (2.0 * math.pi) * acc + math.exp(-rate * t) * miss_no_branch(t, d, r)
    return min(1.0, max(0.0, val)), None


def fe_solve(rate, r, dt, dd, nt, nd, n_alpha, n_s, sweeps):
    tol = 1e-9 * max(dt, dd)
    t_grid = np.arange(nt + 1) * dt
    d_grid = np.arange(nd + 1) * dd
    T, Dg = np.meshgrid(t_grid, d_grid, indexing="ij")
    zero = Dg <= r + tol
    one = ~zero & (T <= Dg - r + tol)
    q = np.where(zero, 0.0, np.where(one, 1.0, np.nan))
    g = np.where(one, 1.0 - np.exp(-rate * T), 0.0)
    interior = np.isnan(q)
    err = np.zeros(5)
    for i in range(1, nt + 1):
        t = i * dt
        gprov = np.where(interior[i], g[i - 1], g[i])
        cols = np.flatnonzero(interior[i])
        free = _free_term(rate, np.full(len(cols), t), cols * dd, r)
        for _ in range(sweeps + 1):
            new = gprov.copy()
            for k, j in enumerate(cols):
                val, bad = _fe_node(g, gprov, i, t, j * dd, rate, r, dt, dd, nd, n_alpha, n_s, tol)
                if bad is not None:
                    err[:] = (1.0, bad[0], bad[1], bad[2], np.nan)
                    return q, GRID_EXTENT, err
                q[i, j] = val
                new[j] = val - free[k]
            gprov = new
        g[i] = gprov
    return q, OK, err
