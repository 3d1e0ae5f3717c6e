"""Numba-jitted CAT stepper and trajectory runner.

State is an (n, d) int64 array kept sorted lexicographically at all
times; the boundary is maintained the same way.  All randomness comes
from the counter-based generator in ``catsim.rng`` (reimplemented here
on uint64; exact agreement is tested), keyed by
(master_seed, stream_id, step, substep) with substep lanes 0..m-1 for
activations and m..2m-1 for transports.

Status codes returned by the step kernel:
    0  ok
    2  boundary size exceeded 2*d*|set|  (never expected)
    3  empty support                      (never expected for n >= m+1)
"""

from __future__ import annotations

import numpy as np
from numba import njit
from numba import float64, int64, uint64

U53 = 1.0 / 9007199254740992.0
GOLDEN = np.uint64(0x9E3779B97F4A7C15)
M1 = np.uint64(0xBF58476D1CE4E5B9)
M2 = np.uint64(0x94D049BB133111EB)


@njit(uint64(uint64), cache=True, inline="always")
def mix64(z):
    z ^= z >> np.uint64(30)
    z *= M1
    z ^= z >> np.uint64(27)
    z *= M2
    z ^= z >> np.uint64(31)
    return z


@njit(uint64(uint64, uint64, uint64, uint64), cache=True, inline="always")
def raw64(master, stream, step, substep):
    h = mix64(master + GOLDEN)
    h = mix64((h ^ stream) + GOLDEN)
    h = mix64((h ^ step) + GOLDEN)
    return mix64((h ^ substep) + GOLDEN)


@njit(float64(uint64, uint64, uint64, uint64), cache=True, inline="always")
def u01(master, stream, step, substep):
    return float64(raw64(master, stream, step, substep) >> np.uint64(11)) * U53


@njit(float64(float64, int64, float64), cache=True, inline="always")
def _weight(fd, mode, beta):
    # fd is the exact squared distance as a float; weight max{dist,1}^-beta
    if fd <= 1.0:
        return 1.0
    if mode == 4:
        return 1.0 / (fd * fd)
    if mode == 2:
        return 1.0 / fd
    if mode == 1:
        return 1.0 / np.sqrt(fd)
    if mode == 3:
        return 1.0 / (fd * np.sqrt(fd))
    if mode == 6:
        return 1.0 / (fd * fd * fd)
    if mode == 8:
        ff = fd * fd
        return 1.0 / (ff * ff)
    if mode == 5:
        return 1.0 / (fd * fd * np.sqrt(fd))
    if mode == 7:
        ff = fd * fd
        return 1.0 / (ff * fd * np.sqrt(fd))
    return np.exp(-0.5 * beta * np.log(fd))


@njit(cache=True, inline="always")
def _dsq_rows(a, i, b, j, d):
    s = int64(0)
    for c in range(d):
        t = a[i, c] - b[j, c]
        s += t * t
    return s


@njit(cache=True, inline="always")
def _dsq_key(a, i, key, d):
    s = int64(0)
    for c in range(d):
        t = a[i, c] - key[c]
        s += t * t
    return s


@njit(cache=True, inline="always")
def _search(arr, cnt, key, d):
    # first index in the lex-sorted arr[0:cnt] with row >= key
    lo = 0
    hi = cnt
    while lo < hi:
        mid = (lo + hi) >> 1
        less = False
        for c in range(d):
            if arr[mid, c] < key[c]:
                less = True
                break
            if arr[mid, c] > key[c]:
                break
        if less:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True, inline="always")
def _match(arr, cnt, idx, key, d):
    if idx >= cnt:
        return False
    for c in range(d):
        if arr[idx, c] != key[c]:
            return False
    return True


@njit(cache=True, inline="always")
def _insert(arr, cnt, idx, key, d):
    for r in range(cnt, idx, -1):
        for c in range(d):
            arr[r, c] = arr[r - 1, c]
    for c in range(d):
        arr[idx, c] = key[c]


@njit(cache=True, inline="always")
def _remove(arr, cnt, idx, d):
    for r in range(idx, cnt - 1):
        for c in range(d):
            arr[r, c] = arr[r + 1, c]


@njit(cache=True, inline="always")
def _select(w, k, u):
    tot = 0.0
    for i in range(k):
        tot += w[i]
    thr = u * tot
    c = 0.0
    for i in range(k):
        c += w[i]
        if c > thr:
            return i
    return k - 1


@njit(cache=True)
def step(cur, n, d, m, mode, beta, master, stream, t, act, trans, bnd, wbuf, key, anc):
    """One CAT step in place on cur[0:n]; fills act/trans with the m
    activated and m transported points."""
    nc = n
    # activation phase: remove m points one at a time
    for jj in range(m):
        if nc <= 0:
            return 3
        if jj == 0:
            for i in range(nc):
                wbuf[i] = 1.0
        else:
            for i in range(nc):
                fd = float64(_dsq_rows(cur, i, act, jj - 1, d))
                wbuf[i] = _weight(fd, mode, beta)
        u = u01(uint64(master), uint64(stream), uint64(t), uint64(jj))
        idx = _select(wbuf, nc, u)
        for c in range(d):
            act[jj, c] = cur[idx, c]
        _remove(cur, nc, idx, d)
        nc -= 1
    if nc <= 0:
        return 3
    # boundary of the remaining set, built sorted
    bn = 0
    for i in range(nc):
        for j in range(d):
            for s in (-1, 1):
                for c in range(d):
                    key[c] = cur[i, c]
                key[j] += s
                pos = _search(cur, nc, key, d)
                if _match(cur, nc, pos, key, d):
                    continue
                pos = _search(bnd, bn, key, d)
                if _match(bnd, bn, pos, key, d):
                    continue
                _insert(bnd, bn, pos, key, d)
                bn += 1
    # transport phase: anchor starts at the last activated point
    for c in range(d):
        anc[c] = act[m - 1, c]
    for jj in range(m):
        if bn <= 0:
            return 3
        if bn > 2 * d * nc:
            return 2
        for i in range(bn):
            fd = float64(_dsq_key(bnd, i, anc, d))
            wbuf[i] = _weight(fd, mode, beta)
        u = u01(uint64(master), uint64(stream), uint64(t), uint64(m + jj))
        idx = _select(wbuf, bn, u)
        for c in range(d):
            key[c] = bnd[idx, c]
            trans[jj, c] = key[c]
            anc[c] = key[c]
        _remove(bnd, bn, idx, d)
        bn -= 1
        pos = _search(cur, nc, key, d)
        _insert(cur, nc, pos, key, d)
        nc += 1
        # incremental boundary update: neighbors of the new point join
        # the boundary unless they are in the set or already in it
        for j in range(d):
            for s in (-1, 1):
                kc = key[j]
                key[j] = kc + s
                pos = _search(cur, nc, key, d)
                if not _match(cur, nc, pos, key, d):
                    pos = _search(bnd, bn, key, d)
                    if not _match(bnd, bn, pos, key, d):
                        _insert(bnd, bn, pos, key, d)
                        bn += 1
                key[j] = kc
    return 0


@njit(cache=True)
def diam_sq(cur, n, d):
    best = int64(0)
    for i in range(n):
        for j in range(i + 1, n):
            s = _dsq_rows(cur, i, cur, j, d)
            if s > best:
                best = s
    return best


@njit(cache=True)
def census(cur, n, d, m, parent, size):
    """Union-find component census.  Returns (n_components, n_small)
    where n_small counts points whose component has <= m elements."""
    for i in range(n):
        parent[i] = i
        size[i] = 1
    for i in range(n):
        for j in range(i + 1, n):
            if _dsq_rows(cur, i, cur, j, d) == 1:
                ri = i
                while parent[ri] != ri:
                    parent[ri] = parent[parent[ri]]
                    ri = parent[ri]
                rj = j
                while parent[rj] != rj:
                    parent[rj] = parent[parent[rj]]
                    rj = parent[rj]
                if ri != rj:
                    parent[ri] = rj
                    size[rj] += size[ri]
    ncomp = 0
    nsmall = 0
    for i in range(n):
        r = i
        while parent[r] != r:
            r = parent[r]
        if r == i:
            ncomp += 1
            if size[i] <= m:
                nsmall += size[i]
    return ncomp, nsmall


@njit(cache=True, inline="always")
def _amlg_ok(a, b, m):
    # exact check of sqrt(a) <= sqrt(b) + m on int64 squared diameters
    L = a - b - int64(m) * int64(m)
    if L <= 0:
        return True
    if L <= 3000000000 and b <= 4611686018427387903 // (4 * m * m):
        return L * L <= 4 * int64(m) * int64(m) * b
    return float64(L) * float64(L) <= 4.0 * float64(m * m) * float64(b)


@njit(cache=True)
def run(cur, n, d, m, mode, beta, master, stream, t0, steps,
        dsq_out, ncomp_out, nsmall_out,
        act, trans, bnd, wbuf, key, anc, parent, size):
    """Advance `steps` CAT steps from absolute step index t0, recording
    per-state squared diameter and component census into index i for
    state at time t0+i (index 0 = entry state).

    Returns (status, mass_violations, amlg_violations); status != 0
    aborts at the offending step.
    """
    mass_viol = 0
    amlg_viol = 0
    dsq_out[0] = diam_sq(cur, n, d)
    nc0, ns0 = census(cur, n, d, m, parent, size)
    ncomp_out[0] = nc0
    nsmall_out[0] = ns0
    for i in range(steps):
        st = step(cur, n, d, m, mode, beta, master, stream, t0 + i,
                  act, trans, bnd, wbuf, key, anc)
        if st != 0:
            return st, mass_viol, amlg_viol
        # rows must stay strictly increasing: sortedness and mass in one scan
        ok = True
        for r in range(n - 1):
            less = False
            for c in range(d):
                if cur[r, c] < cur[r + 1, c]:
                    less = True
                    break
                if cur[r, c] > cur[r + 1, c]:
                    break
            if not less:
                ok = False
        if not ok:
            mass_viol += 1
        a = diam_sq(cur, n, d)
        dsq_out[i + 1] = a
        if not _amlg_ok(a, dsq_out[i], m):
            amlg_viol += 1
        ncc, nss = census(cur, n, d, m, parent, size)
        ncomp_out[i + 1] = ncc
        nsmall_out[i + 1] = nss
    return 0, mass_viol, amlg_viol


def make_scratch(n: int, d: int, m: int):
    """Preallocated work arrays for step/run."""
    return dict(
        act=np.empty((m, d), dtype=np.int64),
        trans=np.empty((m, d), dtype=np.int64),
        bnd=np.empty((2 * d * n + 1, d), dtype=np.int64),
        wbuf=np.empty(max(n, 2 * d * n) + 1, dtype=np.float64),
        key=np.empty(d, dtype=np.int64),
        anc=np.empty(d, dtype=np.int64),
        parent=np.empty(n, dtype=np.int64),
        size=np.empty(n, dtype=np.int64),
    )
