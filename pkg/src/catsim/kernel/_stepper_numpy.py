"""Numpy/python CAT stepper: the fallback backend.

Same semantics as the numba stepper, selection for selection: supports
are iterated in lexicographic order, weights use the same IEEE
arithmetic on exact squared distances, and the cumulative-sum draw is
np.searchsorted(side="right") which picks the identical index as the
jitted linear scan.  Set bookkeeping uses python sets of tuples; the
numeric inner work is vectorized numpy.
"""

from __future__ import annotations

import os

import numpy as np

from .. import rng as _rng

DEBUG = os.environ.get("CATSIM_DEBUG_CHECKS", "") not in ("", "0")


def _weights(fd: np.ndarray, mode: int, beta: float) -> np.ndarray:
    fdc = np.maximum(fd, 1.0)
    if mode == 4:
        return 1.0 / (fdc * fdc)
    if mode == 2:
        return 1.0 / fdc
    if mode == 1:
        return 1.0 / np.sqrt(fdc)
    if mode == 3:
        return 1.0 / (fdc * np.sqrt(fdc))
    if mode == 6:
        return 1.0 / (fdc * fdc * fdc)
    if mode == 8:
        ff = fdc * fdc
        return 1.0 / (ff * ff)
    if mode == 5:
        return 1.0 / (fdc * fdc * np.sqrt(fdc))
    if mode == 7:
        ff = fdc * fdc
        return 1.0 / (ff * fdc * np.sqrt(fdc))
    return np.exp(-0.5 * beta * np.log(fdc))


def _select(w: np.ndarray, u: float) -> int:
    cs = np.cumsum(w)
    idx = int(np.searchsorted(cs, u * cs[-1], side="right"))
    return min(idx, len(w) - 1)


def _fd(rows: np.ndarray, anchor: np.ndarray) -> np.ndarray:
    diff = rows - anchor
    return np.einsum("ij,ij->i", diff, diff).astype(np.float64)


def _boundary_set(cur: set, d: int) -> set:
    out = set()
    for p in cur:
        for j in range(d):
            for s in (-1, 1):
                q = p[:j] + (p[j] + s,) + p[j + 1:]
                if q not in cur:
                    out.add(q)
    return out


def step(pts: np.ndarray, m: int, mode: int, beta: float,
         master: int, stream: int, t: int, debug: bool | None = None):
    """One CAT step on a lex-sorted (n, d) int64 array.

    Returns (new_pts lex-sorted, activated (m, d), transported (m, d)).
    With debug on (argument or CATSIM_DEBUG_CHECKS), the incrementally
    maintained boundary is cross-checked against a full recompute after
    every placement.
    """
    debug = DEBUG if debug is None else debug
    n, d = pts.shape
    cur = pts.copy()
    act = np.empty((m, d), dtype=np.int64)
    # activation phase
    for jj in range(m):
        nc = cur.shape[0]
        if jj == 0:
            w = np.ones(nc)
        else:
            w = _weights(_fd(cur, act[jj - 1]), mode, beta)
        u = _rng.u01(master, stream, t, jj)
        idx = _select(w, u)
        act[jj] = cur[idx]
        cur = np.delete(cur, idx, axis=0)
    # transport phase over the incrementally maintained boundary
    curset = {tuple(int(c) for c in row) for row in cur}
    bset = _boundary_set(curset, d)
    trans = np.empty((m, d), dtype=np.int64)
    anchor = act[m - 1]
    for jj in range(m):
        brows = np.array(sorted(bset), dtype=np.int64)
        w = _weights(_fd(brows, anchor), mode, beta)
        u = _rng.u01(master, stream, t, m + jj)
        idx = _select(w, u)
        chosen = tuple(int(c) for c in brows[idx])
        trans[jj] = brows[idx]
        anchor = brows[idx]
        bset.discard(chosen)
        curset.add(chosen)
        for j in range(d):
            for s in (-1, 1):
                q = chosen[:j] + (chosen[j] + s,) + chosen[j + 1:]
                if q not in curset and q not in bset:
                    bset.add(q)
        if debug and bset != _boundary_set(curset, d):
            raise AssertionError("incremental boundary diverged from recompute")
    new_pts = np.array(sorted(curset), dtype=np.int64)
    if new_pts.shape[0] != n:
        raise AssertionError("mass conservation violated in numpy stepper")
    return new_pts, act, trans
