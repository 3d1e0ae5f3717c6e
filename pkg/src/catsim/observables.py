"""Detectors and statistics over configurations and trajectories.

Progressive boundaries (the ordered removal sequences that make a state
reachable-from and able-to-act), persistence tests for well separated
segment clusters, event flags used by the drift analyses, and the
renewal-time machinery that turns copycat cluster motion into an exact
integer random walk.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .lattice import Configuration, components, in_ball, is_e1_segment, lex_min
from .copycat import TupleState


@dataclass(frozen=True)
class ProgWitness:
    """Ordered points x_1..x_m whose staged removal keeps each x_j on
    the boundary of what would remain."""

    points: tuple

    def __len__(self) -> int:
        return len(self.points)


def _adjacent(p: tuple, q: tuple) -> bool:
    s = 0
    for a, b in zip(p, q):
        s += (a - b) * (a - b)
        if s > 1:
            return False
    return s == 1


def verify_progressive_witness(U: Configuration, m: int,
                               witness: ProgWitness) -> bool:
    """Direct re-check of the defining condition, independent of how the
    witness was found."""
    seq = witness.points
    if len(seq) != m or len(set(seq)) != m:
        return False
    pts = {tuple(int(v) for v in row) for row in U.pts}
    if not all(x in pts for x in seq):
        return False
    for j in range(m):
        remaining = pts.difference(seq[j:])
        if not any(_adjacent(seq[j], y) for y in remaining):
            return False
    return True


def has_progressive_boundary(U: Configuration, m: int):
    """Search all ordered m-subsets of U in lex order for a removal
    sequence x_1..x_m with every x_j adjacent to U minus the suffix
    {x_j..x_m}.  Returns (found, earliest ProgWitness or None)."""
    if U.n <= m:
        raise ValueError("configuration must have more than m elements")
    pts = [tuple(int(v) for v in row) for row in U.pts]
    ptset = set(pts)
    for seq in itertools.permutations(pts, m):
        ok = True
        for j in range(m - 1, -1, -1):
            remaining = ptset.difference(seq[j:])
            if not any(_adjacent(seq[j], y) for y in remaining):
                ok = False
                break
        if ok:
            return True, ProgWitness(points=seq)
    return False, None


def can_persist(C: Configuration, m: int, r: int):
    """True iff every connected component is an e_1-segment sized in
    [m+1, 2m+1] and components are pairwise at distance >= r.

    Restricted to r >= 2, where the parts of any qualifying partition
    are forced to coincide with the connected components.  Returns
    (bool, component tuple or None).
    """
    if r < 2:
        raise ValueError("unsupported separation radius")
    if C.n == 0:
        return False, None
    parts = components(C)
    for part in parts:
        if not (m + 1 <= part.n <= 2 * m + 1) or not is_e1_segment(part):
            return False, None
    rsq = r * r
    for i in range(len(parts)):
        for j in range(i + 1, len(parts)):
            diff = parts[i].pts[:, None, :] - parts[j].pts[None, :, :]
            dsq = int(np.einsum("ijk,ijk->ij", diff, diff).min())
            if dsq < rsq:
                return False, None
    return True, tuple(parts)


def event_add_to_ball(C0: Configuration, C1: Configuration, x, r: float,
                      m: int) -> bool:
    """Did the count inside the ball at x grow, allowing the radius to
    stretch by the per-step reach m?"""
    n0 = sum(1 for p in C0 if in_ball(p, x, r))
    n1 = sum(1 for p in C1 if in_ball(p, x, r + m))
    return n1 > n0


def _small_count(C: Configuration, m: int) -> int:
    return sum(part.n for part in components(C) if part.n <= m)


def event_deplete_small_comps(C0: Configuration, C1: Configuration,
                              m: int) -> bool:
    """Did the number of elements living in small (size <= m) components
    strictly decrease across the step?"""
    return _small_count(C1, m) < _small_count(C0, m)


def event_no_small_comp(C: Configuration, m: int) -> bool:
    """True iff every connected component has more than m elements."""
    return all(part.n > m for part in components(C))


@dataclass
class RenewalSeries:
    """Times at which every cluster is an e_1-segment, with the lex-min
    representative of each cluster recorded at those times."""

    times: list
    reps: list          # reps[l][i] = lex-min point of cluster i at times[l]
    n_clusters: int

    def __len__(self) -> int:
        return len(self.times)

    def increments(self) -> list:
        return [b - a for a, b in zip(self.times, self.times[1:])]


def renewal_series(states: Sequence[TupleState]) -> RenewalSeries:
    """Scan a trajectory of TupleStates (index = step) for the times at
    which all clusters are e_1-segments.

    Defined for copycat trajectories; running it on lifted-chain
    trajectories is exploratory since the renewal theory is developed
    for copycat.
    """
    times: list = []
    reps: list = []
    k = states[0].k if states else 0
    for t, st in enumerate(states):
        if st.k != k:
            raise ValueError("cluster count must stay fixed along the trajectory")
        if all(is_e1_segment(c) for c in st.clusters):
            times.append(t)
            reps.append([tuple(int(v) for v in lex_min(c)) for c in st.clusters])
    return RenewalSeries(times=times, reps=reps, n_clusters=k)


def derived_walk(series: RenewalSeries, i: int, j: int) -> np.ndarray:
    """The integer walk S_k = M^i - M^j read at renewal times, computed
    both as the telescoping sum of per-renewal increments and directly;
    the two must agree exactly.

    Returns an int64 array of shape (len(series), d).
    """
    if i == j:
        raise ValueError("cluster indices must differ")
    for idx in (i, j):
        if not 0 <= idx < series.n_clusters:
            raise ValueError(f"unknown cluster index {idx}")
    if not series.times:
        return np.zeros((0, 0), dtype=np.int64)
    mi = np.array([r[i] for r in series.reps], dtype=np.int64)
    mj = np.array([r[j] for r in series.reps], dtype=np.int64)
    direct = mi - mj
    summed = np.empty_like(direct)
    summed[0] = direct[0]
    for l in range(1, len(direct)):
        summed[l] = summed[l - 1] + (mi[l] - mi[l - 1]) - (mj[l] - mj[l - 1])
    if not np.array_equal(summed, direct):
        raise AssertionError("telescoping identity violated")
    return direct
