"""Compiled kernels (numba ``njit``).

Every function here has a counterpart of the same name and return layout in
``_numpy_kernels``. Random draws go through a ``numpy.random.Generator``
passed in by the caller; numba reproduces numpy's bit stream, so a kernel that
draws in the same order as Python code produces the same numbers.

Status codes returned by the tree kernels: 0 finished, 1 budget exhausted.
"""

import heapq

import numpy as np
from numba import njit

OK = 0
BUDGET = 1
GRID_EXTENT = 2


@njit(cache=True, nogil=True)
def draw_direction(rng, dim, out):
    if dim == 1:
        out[0] = 1.0 if rng.random() < 0.5 else -1.0
        return
    while True:
        nrm = 0.0
        for j in range(dim):
            v = rng.standard_normal()
            out[j] = v
            nrm += v * v
        if nrm > 0.0:
            break
    nrm = np.sqrt(nrm)
    for j in range(dim):
        out[j] /= nrm


@njit(cache=True, nogil=True)
def _draw_length(rng, rate, tau):
    # returns (length, is_leaf); an Exp(0) clock never fires
    if rate > 0.0:
        e = rng.exponential(1.0 / rate)
        if e < tau:
            return e, False
    return tau, True


@njit(cache=True, nogil=True)
def _grow_rows(a, n, cap):
    out = np.empty((cap,) + a.shape[1:], a.dtype)
    out[:n] = a[:n]
    return out


@njit(cache=True, nogil=True)
def _grow_run(dim, rate, horizon, limit, rng, seg, birth, parent, leaf, st, n, top, nu):
    # Depth-first growth until done, at the limit or out of buffer room.
    # Kept separate from grow() so no array is rebound inside the hot loop.
    cap = seg.shape[0]
    scap = st.shape[0]
    while top > 0:
        if n >= limit or n == cap or top + 1 > scap:
            break
        top -= 1
        b = st[top, dim]
        draw_direction(rng, dim, nu)
        ell, is_leaf = _draw_length(rng, rate, horizon - b)
        for j in range(dim):
            x = st[top, j]
            seg[n, j] = x
            seg[n, dim + j] = x + ell * nu[j]
        birth[n] = b
        parent[n] = np.int64(st[top, dim + 1])
        leaf[n] = is_leaf
        if not is_leaf:
            for _ in range(2):
                for j in range(dim):
                    st[top, j] = seg[n, dim + j]
                st[top, dim] = b + ell
                st[top, dim + 1] = n
                top += 1
        n += 1
    return n, top


@njit(cache=True, nogil=True)
def grow(dim, rate, horizon, max_segments, rng):
    # Returns (starts, ends, birth, parent, leaf, status, count). The stack
    # rows hold (position, birth time, parent index) of leaves still to grow.
    cap = 1024
    seg = np.empty((cap, 2 * dim))
    birth = np.empty(cap)
    parent = np.empty(cap, np.int64)
    leaf = np.empty(cap, np.bool_)
    st = np.zeros((64, dim + 2))
    st[0, dim + 1] = -1.0
    top = 1
    n = 0
    nu = np.empty(dim)
    while True:
        n, top = _grow_run(dim, rate, horizon, max_segments, rng, seg, birth, parent, leaf,
                           st, n, top, nu)
        if top == 0 or n >= max_segments:
            break
        if n == seg.shape[0]:
            cap *= 2
            seg = _grow_rows(seg, n, cap)
            birth = _grow_rows(birth, n, cap)
            parent = _grow_rows(parent, n, cap)
            leaf = _grow_rows(leaf, n, cap)
        if top + 1 > st.shape[0]:
            st = _grow_rows(st, top, 2 * st.shape[0])
    status = BUDGET if top > 0 else OK
    return seg[:n, :dim], seg[:n, dim:], birth[:n], parent[:n], leaf[:n], status, n + top


@njit(cache=True, nogil=True)
def _point_segment(p, a, b):
    dim = p.shape[0]
    vv = 0.0
    pv = 0.0
    for j in range(dim):
        v = b[j] - a[j]
        vv += v * v
        pv += (p[j] - a[j]) * v
    u = 0.0
    if vv > 0.0:
        u = pv / vv
        if u < 0.0:
            u = 0.0
        elif u > 1.0:
            u = 1.0
    d2 = 0.0
    for j in range(dim):
        w = p[j] - a[j] - u * (b[j] - a[j])
        d2 += w * w
    return np.sqrt(d2)


@njit(cache=True, nogil=True)
def min_distances(points, starts, ends):
    n_pts = points.shape[0]
    out = np.full(n_pts, np.inf)
    for i in range(n_pts):
        best = np.inf
        for k in range(starts.shape[0]):
            d = _point_segment(points[i], starts[k], ends[k])
            if d < best:
                best = d
        out[i] = best
    return out


@njit(cache=True, nogil=True)
def _ray_distance(p, x, nu, lo, hi):
    # distance from p to {x + u*nu : lo <= u <= hi}, nu unit
    dim = p.shape[0]
    u = 0.0
    for j in range(dim):
        u += (p[j] - x[j]) * nu[j]
    if u < lo:
        u = lo
    elif u > hi:
        u = hi
    d2 = 0.0
    for j in range(dim):
        w = p[j] - x[j] - u * nu[j]
        d2 += w * w
    return np.sqrt(d2)


@njit(cache=True, nogil=True)
def _clip_params(x, nu, ell, center, radius):
    # parameter range of x + u*nu, u in [0, ell], inside the closed ball
    if not np.isfinite(radius):
        return 0.0, ell
    b = 0.0
    c = -radius * radius
    for j in range(x.shape[0]):
        w = x[j] - center[j]
        b += w * nu[j]
        c += w * w
    disc = b * b - c
    if disc < 0.0:
        return 1.0, 0.0
    sq = np.sqrt(disc)
    lo = -b - sq
    hi = -b + sq
    if lo < 0.0:
        lo = 0.0
    if hi > ell:
        hi = ell
    return lo, hi


@njit(cache=True, nogil=True)
def _relevant(x, tau, pts, floors, m, nmax, ncen, nrad, nleft, nright, nlo, nhi, stack):
    # does some uncovered point p satisfy |p - x| - tau < m[p]?
    dim = x.shape[0]
    sp = 1
    stack[0] = 0
    while sp > 0:
        sp -= 1
        k = stack[sp]
        v = nmax[k]
        if v < 0.0:
            continue
        d2 = 0.0
        for j in range(dim):
            w = ncen[k, j] - x[j]
            d2 += w * w
        reach = v + nrad[k] + tau
        if d2 >= reach * reach:
            continue
        if nleft[k] < 0:
            for p in range(nlo[k], nhi[k]):
                if m[p] <= floors[p]:
                    continue
                d2 = 0.0
                for j in range(dim):
                    w = pts[p, j] - x[j]
                    d2 += w * w
                if np.sqrt(d2) - tau < m[p]:
                    return True
        else:
            stack[sp] = nleft[k]
            stack[sp + 1] = nright[k]
            sp += 2
    return False


@njit(cache=True, nogil=True)
def _min_ratio(x, tau, pts, floors, m, nmax, ncen, nrad, nleft, nright, nlo, nhi, stack):
    # min over uncovered p of (|p - x| - m[p]) / tau, the speed a lineage from
    # x needs to improve p; inf when every point is covered
    dim = x.shape[0]
    best = np.inf
    sp = 1
    stack[0] = 0
    while sp > 0:
        sp -= 1
        k = stack[sp]
        v = nmax[k]
        if v < 0.0:
            continue
        d2 = 0.0
        for j in range(dim):
            w = ncen[k, j] - x[j]
            d2 += w * w
        if (np.sqrt(d2) - nrad[k] - v) / tau >= best:
            continue
        if nleft[k] < 0:
            for p in range(nlo[k], nhi[k]):
                if m[p] <= floors[p]:
                    continue
                d2 = 0.0
                for j in range(dim):
                    w = pts[p, j] - x[j]
                    d2 += w * w
                r = (np.sqrt(d2) - m[p]) / tau
                if r < best:
                    best = r
        else:
            stack[sp] = nleft[k]
            stack[sp + 1] = nright[k]
            sp += 2
    return best


@njit(cache=True, nogil=True)
def _update(x, nu, lo, hi, pts, floors, m, nmax, ncen, nrad, nleft, nright, nlo, nhi, stack, visited):
    sp = 1
    stack[0] = 0
    nvis = 0
    while sp > 0:
        sp -= 1
        k = stack[sp]
        v = nmax[k]
        if v < 0.0:
            continue
        if _ray_distance(ncen[k], x, nu, lo, hi) - nrad[k] >= v:
            continue
        if nleft[k] < 0:
            newmax = -1.0
            for p in range(nlo[k], nhi[k]):
                if m[p] > floors[p]:
                    d = _ray_distance(pts[p], x, nu, lo, hi)
                    if d < m[p]:
                        m[p] = d
                    if m[p] > floors[p] and m[p] > newmax:
                        newmax = m[p]
            nmax[k] = newmax
        else:
            visited[nvis] = k
            nvis += 1
            stack[sp] = nleft[k]
            stack[sp + 1] = nright[k]
            sp += 2
    for i in range(nvis - 1, -1, -1):
        k = visited[i]
        a = nmax[nleft[k]]
        b = nmax[nright[k]]
        nmax[k] = a if a > b else b


@njit(cache=True, nogil=True)
def _cover_full(dim, rate, horizon, pts, floors, m, clip_center, clip_radius,
                ncen, nrad, nleft, nright, nlo, nhi, max_nodes, rng):
    # whole tree, depth first, same draw order as grow()
    n_nodes = nrad.shape[0]
    nmax = np.full(n_nodes, np.inf)
    stack = np.empty(n_nodes + 2, np.int64)
    visited = np.empty(n_nodes, np.int64)
    scap = 64
    st_pos = np.zeros((scap, dim))
    st_birth = np.zeros(scap)
    top = 1
    nodes = 0
    x = np.empty(dim)
    nu = np.empty(dim)
    while top > 0:
        if nodes >= max_nodes:
            return m, nodes + top, BUDGET
        top -= 1
        for j in range(dim):
            x[j] = st_pos[top, j]
        b = st_birth[top]
        nodes += 1
        draw_direction(rng, dim, nu)
        ell, is_leaf = _draw_length(rng, rate, horizon - b)
        lo, hi = _clip_params(x, nu, ell, clip_center, clip_radius)
        if lo <= hi:
            _update(x, nu, lo, hi, pts, floors, m, nmax, ncen, nrad,
                    nleft, nright, nlo, nhi, stack, visited)
        if is_leaf:
            continue
        if top + 2 > scap:
            scap *= 2
            p2 = np.empty((scap, dim))
            b2 = np.empty(scap)
            p2[:top] = st_pos[:top]
            b2[:top] = st_birth[:top]
            st_pos, st_birth = p2, b2
        for _ in range(2):
            for j in range(dim):
                st_pos[top, j] = x[j] + ell * nu[j]
            st_birth[top] = b + ell
            top += 1
    return m, nodes, OK


@njit(cache=True, nogil=True)
def _cover_lazy(dim, rate, horizon, pts, floors, m, clip_center, clip_radius,
                ncen, nrad, nleft, nright, nlo, nhi, max_nodes, rng):
    # Best-first lazy growth. A subtree rooted at x with time left tau stays
    # in B(x, tau), so it is only drawn if some uncovered p has
    # |p - x| - tau < m[p]. Pending subtrees are ordered by _min_ratio; any
    # order that depends only on what has been drawn leaves the law intact.
    n_nodes = nrad.shape[0]
    nmax = np.full(n_nodes, np.inf)
    stack = np.empty(n_nodes + 2, np.int64)
    visited = np.empty(n_nodes, np.int64)
    cap = 1024
    pos = np.zeros((cap, dim))
    birth = np.zeros(cap)
    free = [np.int64(0) for _ in range(0)]
    used = 1
    heap = [(0.0, np.int64(0))]
    nodes = 0
    x = np.empty(dim)
    nu = np.empty(dim)
    while len(heap) > 0:
        _, slot = heapq.heappop(heap)
        for j in range(dim):
            x[j] = pos[slot, j]
        b = birth[slot]
        tau = horizon - b
        free.append(slot)
        if not _relevant(x, tau, pts, floors, m, nmax, ncen, nrad,
                         nleft, nright, nlo, nhi, stack):
            continue
        if nodes >= max_nodes:
            return m, nodes, BUDGET
        nodes += 1
        draw_direction(rng, dim, nu)
        ell, is_leaf = _draw_length(rng, rate, tau)
        lo, hi = _clip_params(x, nu, ell, clip_center, clip_radius)
        if lo <= hi:
            _update(x, nu, lo, hi, pts, floors, m, nmax, ncen, nrad,
                    nleft, nright, nlo, nhi, stack, visited)
        if is_leaf:
            continue
        for j in range(dim):
            x[j] += ell * nu[j]
        key = _min_ratio(x, tau - ell, pts, floors, m, nmax, ncen, nrad,
                         nleft, nright, nlo, nhi, stack)
        if key >= 1.0:
            continue
        for _ in range(2):
            if len(free) > 0:
                sl = free.pop()
            else:
                if used == cap:
                    cap *= 2
                    p2 = np.zeros((cap, dim))
                    b2 = np.zeros(cap)
                    p2[:used] = pos[:used]
                    b2[:used] = birth[:used]
                    pos, birth = p2, b2
                sl = np.int64(used)
                used += 1
            for j in range(dim):
                pos[sl, j] = x[j]
            birth[sl] = b + ell
            heapq.heappush(heap, (key, sl))
    return m, nodes, OK


@njit(cache=True, nogil=True)
def cover(dim, rate, horizon, pts, floors, m0, clip_center, clip_radius,
          ncen, nrad, nleft, nright, nlo, nhi, max_nodes, prune, rng):
    # Distances from pts to the tree clipped to B(clip_center, clip_radius).
    # m starts at m0 (inf for plain distances). On return m[p] equals
    # min(m0[p], distance) where that exceeds floors[p], and is <= floors[p]
    # otherwise. Returns (m, segments drawn, status).
    m = m0.copy()
    if pts.shape[0] == 0:
        return m, 0, OK
    if prune:
        return _cover_lazy(dim, rate, horizon, pts, floors, m, clip_center, clip_radius,
                           ncen, nrad, nleft, nright, nlo, nhi, max_nodes, rng)
    return _cover_full(dim, rate, horizon, pts, floors, m, clip_center, clip_radius,
                       ncen, nrad, nleft, nright, nlo, nhi, max_nodes, rng)


@njit(cache=True, nogil=True)
def reach_radius(dim, rate, horizon, target, max_nodes, rng):
    # (reached, nodes explored, status)
    if target <= 0.0:
        return True, 0, OK
    scap = 64
    st_pos = np.zeros((scap, dim))
    st_birth = np.zeros(scap)
    top = 1
    nodes = 0
    nu = np.empty(dim)
    while top > 0:
        top -= 1
        b = st_birth[top]
        tau = horizon - b
        r2 = 0.0
        for j in range(dim):
            r2 += st_pos[top, j] * st_pos[top, j]
        if np.sqrt(r2) + tau < target:
            continue
        if nodes >= max_nodes:
            return False, nodes, BUDGET
        nodes += 1
        draw_direction(rng, dim, nu)
        ell, is_leaf = _draw_length(rng, rate, tau)
        r2 = 0.0
        for j in range(dim):
            w = st_pos[top, j] + ell * nu[j]
            r2 += w * w
        if np.sqrt(r2) >= target:
            return True, nodes, OK
        if not is_leaf:
            base = st_pos[top].copy()
            if top + 2 > scap:
                scap *= 2
                p2 = np.empty((scap, dim))
                b2 = np.empty(scap)
                p2[:top] = st_pos[:top]
                b2[:top] = st_birth[:top]
                st_pos, st_birth = p2, b2
            for _ in range(2):
                for j in range(dim):
                    st_pos[top, j] = base[j] + ell * nu[j]
                st_birth[top] = b + ell
                top += 1
    return False, nodes, OK


@njit(cache=True, nogil=True)
def branch_max_displacement(rate, horizon, dim, n, rng):
    # sequential construction: Exp(rate) gaps, fresh direction per piece
    out = np.empty(n)
    nu = np.empty(dim)
    x = np.empty(dim)
    for i in range(n):
        x[:] = 0.0
        s = 0.0
        best = 0.0
        while True:
            draw_direction(rng, dim, nu)
            ell, is_leaf = _draw_length(rng, rate, horizon - s)
            r2 = 0.0
            for j in range(dim):
                x[j] += ell * nu[j]
                r2 += x[j] * x[j]
            r = np.sqrt(r2)
            if r > best:
                best = r
            s += ell
            if is_leaf:
                break
        out[i] = best
    return out


# --- connection-probability functional equation (2D) ---------------------

@njit(cache=True, nogil=True)
def miss_no_branch(t, d, r):
    # first ray of length t from 0 avoids the closed disk B(x, r), |x| = d > r
    seam = np.sqrt(d * d - r * r)
    if t >= seam:
        return 1.0 - np.arcsin(r / d) / np.pi
    c = (d * d + t * t - r * r) / (2.0 * t * d)
    if c > 1.0:
        c = 1.0
    elif c < -1.0:
        c = -1.0
    return 1.0 - np.arccos(c) / np.pi


@njit(cache=True, nogil=True)
def _free_term(rate, t, d, r):
    # e^{-rate t} f(t, d): the no-branching part of q, with f = 1 out of reach
    if t <= d - r:
        return np.exp(-rate * t)
    return np.exp(-rate * t) * miss_no_branch(t, d, r)


@njit(cache=True, nogil=True)
def _g_at(g, gprov, i_cur, i, j):
    if i == i_cur:
        return gprov[j]
    return g[i, j]


@njit(cache=True, nogil=True)
def _interp(g, gprov, i_cur, tau, dist, rate, r, dt, dd, nd, tol, err):
    # q(tau, dist) from the grid. Only the remainder g = q - e^{-rate t} f is
    # interpolated; the free term carries the jump at the disk edge and the
    # square-root edge at t = d - r, and is added back exactly.
    if dist <= r + tol:
        return 0.0
    if tau <= dist - r + tol:
        return 1.0
    a = tau / dt
    i0 = int(np.floor(a))
    if i0 >= i_cur:
        i0 = i_cur - 1
    if i0 < 0:
        i0 = 0
    wa = a - i0
    b = dist / dd
    j0 = int(np.floor(b))
    if j0 + 2 > nd:
        err[0] = 1.0
        return 1.0
    wb = b - j0
    v00 = _g_at(g, gprov, i_cur, i0, j0)
    v10 = _g_at(g, gprov, i_cur, i0 + 1, j0)
    v01 = _g_at(g, gprov, i_cur, i0, j0 + 1)
    v11 = _g_at(g, gprov, i_cur, i0 + 1, j0 + 1)
    if j0 * dd <= r + tol:
        # left column lies inside the disk; extrapolate from the right
        v00 = 2.0 * v01 - _g_at(g, gprov, i_cur, i0, j0 + 2)
        v10 = 2.0 * v11 - _g_at(g, gprov, i_cur, i0 + 1, j0 + 2)
    rem = ((1.0 - wa) * ((1.0 - wb) * v00 + wb * v01)
           + wa * ((1.0 - wb) * v10 + wb * v11))
    val = rem + _free_term(rate, tau, dist, r)
    return min(max(val, 0.0), 1.0)


@njit(cache=True, nogil=True)
def _s_integral(g, gprov, i_cur, t, d, cos_a, s_hi, rate, r, dt, dd, nd, n_s, tol, err):
    # trapezoid on the graded mesh s_k = s_hi (k/(n_s-1))^2
    if s_hi <= 0.0:
        return 0.0
    total = 0.0
    prev_s = 0.0
    prev_v = 0.0
    for k in range(n_s):
        u = k / (n_s - 1.0)
        s = s_hi * u * u
        dist2 = d * d + s * s - 2.0 * d * s * cos_a
        dist = np.sqrt(dist2) if dist2 > 0.0 else 0.0
        q = _interp(g, gprov, i_cur, t - s, dist, rate, r, dt, dd, nd, tol, err)
        if err[0] != 0.0:
            err[1] = t
            err[2] = d
            err[3] = s
            return 0.0
        v = np.exp(-rate * s) * q * q
        if k > 0:
            total += 0.5 * (s - prev_s) * (v + prev_v)
        prev_s = s
        prev_v = v
    return total


@njit(cache=True, nogil=True)
def _fe_node(g, gprov, i_cur, t, d, rate, r, dt, dd, nd, n_alpha, n_s, tol, err):
    alpha0 = np.arcsin(min(r / d, 1.0))
    acc = 0.0
    if rate > 0.0:
        h = alpha0 / (n_alpha - 1.0)
        for a in range(n_alpha):
            al = a * h
            w = h if 0 < a < n_alpha - 1 else 0.5 * h
            sa = np.sin(al)
            ca = np.cos(al)
            rad = r * r - d * d * sa * sa
            s0 = d * ca - np.sqrt(rad if rad > 0.0 else 0.0)
            s_hi = t if t < s0 else s0
            acc += w * _s_integral(g, gprov, i_cur, t, d, ca, s_hi, rate, r, dt, dd, nd, n_s, tol, err)
            if err[0] != 0.0:
                err[4] = al
                return 0.0
        h = (np.pi - alpha0) / (n_alpha - 1.0)
        for a in range(n_alpha):
            al = alpha0 + a * h
            w = h if 0 < a < n_alpha - 1 else 0.5 * h
            acc += w * _s_integral(g, gprov, i_cur, t, d, np.cos(al), t, rate, r, dt, dd, nd, n_s, tol, err)
            if err[0] != 0.0:
                err[4] = al
                return 0.0
        # the +/- alpha halves are mirror images
        acc *= 2.0 * rate / (2.0 * np.pi)
    val = acc + np.exp(-rate * t) * miss_no_branch(t, d, r)
    return min(max(val, 0.0), 1.0)


@njit(cache=True, nogil=True)
def fe_solve(rate, r, dt, dd, nt, nd, n_alpha, n_s, sweeps):
    # Explicit march in t. Row i only reads rows < i, except near s = 0 where
    # the row being built is needed; it is seeded with row i-1 and refreshed
    # by `sweeps` extra passes. Returns (q, status, err) with
    # err = (flag, t, d, s, alpha) on a grid-extent failure.
    tol = 1e-9 * max(dt, dd)
    q = np.empty((nt + 1, nd + 1))
    g = np.zeros((nt + 1, nd + 1))
    interior = np.zeros((nt + 1, nd + 1), np.bool_)
    for i in range(nt + 1):
        t = i * dt
        for j in range(nd + 1):
            d = j * dd
            if d <= r + tol:
                q[i, j] = 0.0
            elif t <= d - r + tol:
                q[i, j] = 1.0
                g[i, j] = 1.0 - np.exp(-rate * t)
            else:
                q[i, j] = np.nan
                interior[i, j] = True
    err = np.zeros(5)
    gprov = np.empty(nd + 1)
    new = np.empty(nd + 1)
    for i in range(1, nt + 1):
        t = i * dt
        for j in range(nd + 1):
            gprov[j] = g[i - 1, j] if interior[i, j] else g[i, j]
        for _ in range(sweeps + 1):
            for j in range(nd + 1):
                if interior[i, j]:
                    d = j * dd
                    val = _fe_node(g, gprov, i, t, d, rate, r, dt, dd, nd, n_alpha, n_s, tol, err)
                    if err[0] != 0.0:
                        return q, GRID_EXTENT, err
                    q[i, j] = val
                    new[j] = val - _free_term(rate, t, d, r)
                else:
                    new[j] = g[i, j]
            gprov[:] = new
        g[i, :] = gprov
    return q, OK, err
