"""Hot numeric kernels.

Every kernel exists in two functionally identical flavours: a tight loop
compiled with numba's ``@njit``, and a pure-numpy fallback.  The active
flavour is chosen at import time; set the environment variable
``EMPWASS_NUMBA=0`` to force the numpy path (or it is chosen automatically
when numba is not importable).  ``benchmarks/bench_kernels.py`` compares
the two.
"""

from __future__ import annotations

import os

import numpy as np

_WANT_NUMBA = os.environ.get("EMPWASS_NUMBA", "1") != "0"

try:
    if not _WANT_NUMBA:
        raise ImportError("numba disabled via EMPWASS_NUMBA=0")
    from numba import njit as _njit

    USE_NUMBA = True
except ImportError:
    USE_NUMBA = False

    def _njit(*args, **kwargs):  # no-op decorator stand-in
        if args and callable(args[0]):
            return args[0]

        def deco(func):
            return func

        return deco


def backend() -> str:
    """Name of the active kernel backend."""
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# 1D Wasserstein between weighted staircases
# ---------------------------------------------------------------------------

def _wpp_staircase_loop(xa, ca, xb, cb, p):
    # xa/xb ascending atom positions, ca/cb cumulative weights ending at 1.
    na = xa.shape[0]
    nb = xb.shape[0]
    ia = 0
    ib = 0
    u = 0.0
    tot = 0.0
    while ia < na and ib < nb:
        ua = ca[ia]
        ub = cb[ib]
        unext = ua if ua < ub else ub
        du = unext - u
        if du > 0.0:
            d = xa[ia] - xb[ib]
            if d < 0.0:
                d = -d
            tot += du * d ** p
        u = unext
        if ua <= unext:
            ia += 1
        if ub <= unext:
            ib += 1
    return tot


def _wpp_staircase_numpy(xa, ca, xb, cb, p):
    grid = np.union1d(ca, cb)
    lo = np.concatenate((np.zeros(1), grid[:-1]))
    seg = grid - lo
    mids = 0.5 * (grid + lo)
    qa = xa[np.searchsorted(ca, mids, side="left")]
    qb = xb[np.searchsorted(cb, mids, side="left")]
    return float(np.sum(seg * np.abs(qa - qb) ** p))


# ---------------------------------------------------------------------------
# Greedy covering / packing on Euclidean point arrays
# ---------------------------------------------------------------------------

def _greedy_cover_pts_loop(pts, delta):
    n, d = pts.shape
    # relative epsilon keeps points at exactly distance delta covered
    d2 = delta * delta * (1.0 + 1e-12)
    covered = np.zeros(n, np.bool_)
    centers = np.empty(n, np.int64)
    k = 0
    start = 0
    while True:
        idx = -1
        for i in range(start, n):
            if not covered[i]:
                idx = i
                break
        if idx < 0:
            break
        start = idx
        centers[k] = idx
        k += 1
        for i in range(idx, n):
            if not covered[i]:
                s = 0.0
                for t in range(d):
                    dd = pts[i, t] - pts[idx, t]
                    s += dd * dd
                if s <= d2:
                    covered[i] = True
    return centers[:k]


def _greedy_cover_pts_numpy(pts, delta):
    n = pts.shape[0]
    d2 = delta * delta * (1.0 + 1e-12)
    covered = np.zeros(n, bool)
    centers = []
    while not covered.all():
        idx = int(np.argmin(covered))
        centers.append(idx)
        diff = pts - pts[idx]
        covered |= np.einsum("ij,ij->i", diff, diff) <= d2
    return np.asarray(centers, np.int64)


def _greedy_packing_pts_loop(pts, sep):
    # maximal subset with pairwise distance > sep, lowest indices first
    n, d = pts.shape
    s2 = sep * sep * (1.0 + 1e-12)
    chosen = np.empty(n, np.int64)
    k = 0
    for i in range(n):
        ok = True
        for c in range(k):
            j = chosen[c]
            s = 0.0
            for t in range(d):
                dd = pts[i, t] - pts[j, t]
                s += dd * dd
            if s <= s2:
                ok = False
                break
        if ok:
            chosen[k] = i
            k += 1
    return chosen[:k]


def _greedy_packing_pts_numpy(pts, sep):
    n = pts.shape[0]
    s2 = sep * sep * (1.0 + 1e-12)
    alive = np.ones(n, bool)
    chosen = []
    while alive.any():
        idx = int(np.argmax(alive))
        chosen.append(idx)
        diff = pts - pts[idx]
        alive &= np.einsum("ij,ij->i", diff, diff) > s2
    return np.asarray(chosen, np.int64)


def _assign_nearest_loop(pts, centers):
    # centers is a coordinate array; ties go to the earliest center
    n, d = pts.shape
    m = centers.shape[0]
    out = np.empty(n, np.int64)
    for i in range(n):
        best = 0
        bestd = np.inf
        for c in range(m):
            s = 0.0
            for t in range(d):
                dd = pts[i, t] - centers[c, t]
                s += dd * dd
            if s < bestd:
                bestd = s
                best = c
        out[i] = best
    return out


def _assign_nearest_numpy(pts, centers):
    diff = pts[:, None, :] - centers[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    return np.argmin(d2, axis=1).astype(np.int64)


# Matrix variants for explicit-matrix metric spaces.

def _greedy_cover_mat_loop(D, delta):
    n = D.shape[0]
    delta = delta * (1.0 + 1e-12)
    covered = np.zeros(n, np.bool_)
    centers = np.empty(n, np.int64)
    k = 0
    start = 0
    while True:
        idx = -1
        for i in range(start, n):
            if not covered[i]:
                idx = i
                break
        if idx < 0:
            break
        start = idx
        centers[k] = idx
        k += 1
        for i in range(idx, n):
            if not covered[i] and D[idx, i] <= delta:
                covered[i] = True
    return centers[:k]


def _greedy_cover_mat_numpy(D, delta):
    n = D.shape[0]
    delta = delta * (1.0 + 1e-12)
    covered = np.zeros(n, bool)
    centers = []
    while not covered.all():
        idx = int(np.argmin(covered))
        centers.append(idx)
        covered |= D[idx] <= delta
    return np.asarray(centers, np.int64)


def _greedy_packing_mat_loop(D, sep):
    n = D.shape[0]
    sep = sep * (1.0 + 1e-12)
    chosen = np.empty(n, np.int64)
    k = 0
    for i in range(n):
        ok = True
        for c in range(k):
            if D[i, chosen[c]] <= sep:
                ok = False
                break
        if ok:
            chosen[k] = i
            k += 1
    return chosen[:k]


def _greedy_packing_mat_numpy(D, sep):
    n = D.shape[0]
    sep = sep * (1.0 + 1e-12)
    alive = np.ones(n, bool)
    chosen = []
    while alive.any():
        idx = int(np.argmax(alive))
        chosen.append(idx)
        alive &= D[idx] > sep
    return np.asarray(chosen, np.int64)


def _assign_nearest_mat_loop(D):
    # D is the points-by-centers distance block; ties to earliest center
    n, m = D.shape
    out = np.empty(n, np.int64)
    for i in range(n):
        best = 0
        bestd = np.inf
        for c in range(m):
            if D[i, c] < bestd:
                bestd = D[i, c]
                best = c
        out[i] = best
    return out


def _assign_nearest_mat_numpy(D):
    return np.argmin(D, axis=1).astype(np.int64)


# ---------------------------------------------------------------------------
# Transportation simplex (dense MODI) for exact min-cost transport
# ---------------------------------------------------------------------------
# Deterministic pivoting: entering variable is the most negative reduced
# cost (lexicographic tie-break); after BLAND_SWITCH iterations it falls
# back to Bland's rule, which excludes cycling. Status codes:
# 0 = optimal, 1 = iteration cap hit.

def _transport_simplex_impl(a, b, C, tol, max_iter):
    m = a.shape[0]
    n = b.shape[0]
    X = np.zeros((m, n))
    basic = np.zeros((m, n), np.bool_)

    # Northwest-corner initial basis: exactly m + n - 1 basic cells.
    ra = a.copy()
    rb = b.copy()
    i = 0
    j = 0
    while True:
        t = ra[i] if ra[i] < rb[j] else rb[j]
        X[i, j] = t
        basic[i, j] = True
        ra[i] -= t
        rb[j] -= t
        if i == m - 1 and j == n - 1:
            break
        if j == n - 1:
            i += 1
        elif i == m - 1:
            j += 1
        elif ra[i] <= rb[j]:
            i += 1
        else:
            j += 1

    u = np.empty(m)
    v = np.empty(n)
    useen = np.zeros(m, np.bool_)
    vseen = np.zeros(n, np.bool_)
    # node queue over rows (0..m-1) and cols (m..m+n-1)
    queue = np.empty(m + n, np.int64)
    parent = np.empty(m + n, np.int64)
    cyc_i = np.empty(m + n, np.int64)
    cyc_j = np.empty(m + n, np.int64)

    bland_switch = 8 * (m + n)
    it = 0
    while it < max_iter:
        it += 1

        # --- duals from the basis tree (connected by construction)
        for k in range(m):
            useen[k] = False
        for k in range(n):
            vseen[k] = False
        u[0] = 0.0
        useen[0] = True
        queue[0] = 0
        head = 0
        tail = 1
        while head < tail:
            node = queue[head]
            head += 1
            if node < m:
                for jj in range(n):
                    if basic[node, jj] and not vseen[jj]:
                        v[jj] = C[node, jj] - u[node]
                        vseen[jj] = True
                        queue[tail] = m + jj
                        tail += 1
            else:
                jj = node - m
                for ii in range(m):
                    if basic[ii, jj] and not useen[ii]:
                        u[ii] = C[ii, jj] - v[jj]
                        useen[ii] = True
                        queue[tail] = ii
                        tail += 1

        # --- entering variable
        bi = -1
        bj = -1
        best = -tol
        if it <= bland_switch:
            for ii in range(m):
                for jj in range(n):
                    if not basic[ii, jj]:
                        r = C[ii, jj] - u[ii] - v[jj]
                        if r < best:
                            best = r
                            bi = ii
                            bj = jj
        else:
            for ii in range(m):
                if bi >= 0:
                    break
                for jj in range(n):
                    if not basic[ii, jj]:
                        r = C[ii, jj] - u[ii] - v[jj]
                        if r < -tol:
                            bi = ii
                            bj = jj
                            break
        if bi < 0:
            return X, 0

        # --- unique tree path from row bi to col bj
        for k in range(m + n):
            parent[k] = -2
        parent[bi] = -1
        queue[0] = bi
        head = 0
        tail = 1
        target = m + bj
        while head < tail and parent[target] == -2:
            node = queue[head]
            head += 1
            if node < m:
                for jj in range(n):
                    if basic[node, jj] and parent[m + jj] == -2:
                        parent[m + jj] = node
                        queue[tail] = m + jj
                        tail += 1
            else:
                jj = node - m
                for ii in range(m):
                    if basic[ii, jj] and parent[ii] == -2:
                        parent[ii] = m + jj
                        queue[tail] = ii
                        tail += 1

        # cycle cells: entering (bi,bj) is '+'; walking back from col bj
        # alternates '-', '+', ...
        ncyc = 0
        node = target
        while parent[node] != -1:
            par = parent[node]
            if node >= m:
                cyc_i[ncyc] = par
                cyc_j[ncyc] = node - m
            else:
                cyc_i[ncyc] = node
                cyc_j[ncyc] = par - m
            ncyc += 1
            node = par

        # theta over '-' cells (even positions 0,2,... in the walk)
        theta = np.inf
        leave = -1
        for k in range(0, ncyc, 2):
            xv = X[cyc_i[k], cyc_j[k]]
            if xv < theta:
                theta = xv
                leave = k
        for k in range(0, ncyc, 2):
            X[cyc_i[k], cyc_j[k]] -= theta
        for k in range(1, ncyc, 2):
            X[cyc_i[k], cyc_j[k]] += theta
        X[bi, bj] += theta
        basic[bi, bj] = True
        basic[cyc_i[leave], cyc_j[leave]] = False
        X[cyc_i[leave], cyc_j[leave]] = 0.0

    return X, 1


if USE_NUMBA:
    wpp_staircase = _njit(cache=True)(_wpp_staircase_loop)
    greedy_cover_pts = _njit(cache=True)(_greedy_cover_pts_loop)
    greedy_packing_pts = _njit(cache=True)(_greedy_packing_pts_loop)
    assign_nearest_pts = _njit(cache=True)(_assign_nearest_loop)
    greedy_cover_mat = _njit(cache=True)(_greedy_cover_mat_loop)
    greedy_packing_mat = _njit(cache=True)(_greedy_packing_mat_loop)
    assign_nearest_mat = _njit(cache=True)(_assign_nearest_mat_loop)
    transport_simplex = _njit(cache=True)(_transport_simplex_impl)
else:
    wpp_staircase = _wpp_staircase_numpy
    greedy_cover_pts = _greedy_cover_pts_numpy
    greedy_packing_pts = _greedy_packing_pts_numpy
    assign_nearest_pts = _assign_nearest_numpy
    greedy_cover_mat = _greedy_cover_mat_numpy
    greedy_packing_mat = _greedy_packing_mat_numpy
    assign_nearest_mat = _assign_nearest_mat_numpy
    transport_simplex = _transport_simplex_impl
