"""Geometry on the integer lattice Z^d.

Configurations are finite point sets stored as lexicographically sorted
(n, d) int64 arrays.  All distance comparisons go through exact integer
squared norms; floating-point distances appear only at the reporting
boundary.  Connectivity is nearest-neighbor adjacency (squared distance
exactly 1), and the boundary of a set is its outer site boundary under
that adjacency.

This module favors clarity; the simulation kernels keep their own tuned
twins of the few operations that sit in hot loops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence, Union

import numpy as np

Point = tuple  # tuple of d ints

PointLike = Union[Point, Sequence[int]]


def _as_rows(points: Union["Configuration", Iterable[PointLike], np.ndarray],
             dim: Optional[int] = None) -> np.ndarray:
    if isinstance(points, Configuration):
        return points.pts
    arr = np.asarray(list(points) if not isinstance(points, np.ndarray) else points,
                     dtype=np.int64)
    if arr.size == 0:
        arr = arr.reshape(0, dim if dim is not None else 0)
    if arr.ndim != 2:
        raise ValueError("points must form an (n, d) array")
    return arr


class Configuration:
    """Finite subset of Z^d; rows sorted lexicographically, duplicates dropped."""

    __slots__ = ("pts", "_key")

    def __init__(self, points: Union[Iterable[PointLike], np.ndarray],
                 dim: Optional[int] = None):
        arr = _as_rows(points, dim)
        if arr.shape[0] > 0:
            arr = np.unique(arr, axis=0)  # sorts rows lexicographically
        if dim is not None and arr.shape[0] > 0 and arr.shape[1] != dim:
            raise ValueError(f"points have dimension {arr.shape[1]}, expected {dim}")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        self.pts = arr
        self._key = (arr.shape, arr.tobytes())

    @property
    def d(self) -> int:
        return self.pts.shape[1]

    @property
    def n(self) -> int:
        return self.pts.shape[0]

    def __len__(self) -> int:
        return self.pts.shape[0]

    def __iter__(self) -> Iterator[Point]:
        return (tuple(int(c) for c in row) for row in self.pts)

    def __contains__(self, point: PointLike) -> bool:
        if self.n == 0:
            return False
        row = np.asarray(point, dtype=np.int64)
        idx = _row_search(self.pts, row)
        return idx < self.n and bool(np.array_equal(self.pts[idx], row))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Configuration) and self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __repr__(self) -> str:
        pts = ", ".join(str(p) for p in self)
        return f"Configuration(d={self.d}, {{{pts}}})"

    def translate(self, v: PointLike) -> "Configuration":
        vec = np.asarray(v, dtype=np.int64)
        return Configuration(self.pts + vec)


def _row_search(rows: np.ndarray, row: np.ndarray) -> int:
    """Index of the first row >= `row` in a lex-sorted (n, d) array."""
    lo, hi = 0, rows.shape[0]
    key = tuple(row)
    while lo < hi:
        mid = (lo + hi) // 2
        if tuple(rows[mid]) < key:
            lo = mid + 1
        else:
            hi = mid
    return lo


def segment(n: int, d: int, axis: int = 0) -> Configuration:
    """n consecutive points along the given axis, starting at the origin."""
    if n < 1:
        raise ValueError("segment needs n >= 1")
    pts = np.zeros((n, d), dtype=np.int64)
    pts[:, axis] = np.arange(n)
    return Configuration(pts)


def diameter_sq(C: Configuration) -> int:
    """Exact squared diameter (max squared pairwise distance)."""
    if C.n == 0:
        raise ValueError("empty configuration")
    if C.n == 1:
        return 0
    a = C.pts
    # pairwise differences; n is small everywhere this is used
    diff = a[:, None, :] - a[None, :, :]
    return int(np.max(np.einsum("ijk,ijk->ij", diff, diff)))


def diameter(C: Configuration) -> float:
    return math.sqrt(diameter_sq(C))


def distance_sq(A: Configuration, B: Configuration) -> Union[int, float]:
    """Exact min squared distance between sets; +inf if one side is empty."""
    if A.n == 0 and B.n == 0:
        raise ValueError("distance between two empty configurations")
    if A.n == 0 or B.n == 0:
        return math.inf
    diff = A.pts[:, None, :] - B.pts[None, :, :]
    return int(np.min(np.einsum("ijk,ijk->ij", diff, diff)))

def distance(A: Configuration, B: Configuration) -> float:
    dsq = distance_sq(A, B)
    return math.inf if dsq == math.inf else math.sqrt(dsq)


def neighbors(p: Point) -> list:
    """The 2d nearest neighbors of a point."""
    out = []
    for j in range(len(p)):
        for s in (1, -1):
            q = list(p)
            q[j] += s
            out.append(tuple(q))
    return out


def boundary(C: Configuration) -> Configuration:
    """Outer site boundary: sites not in C at distance exactly 1 from C."""
    if C.n == 0:
        raise ValueError("empty configuration")
    inside = set(C)
    out = {q for p in C for q in neighbors(p) if q not in inside}
    return Configuration(sorted(out), dim=C.d)


def in_ball(x: PointLike, y: PointLike, r: float) -> bool:
    """Strict membership test for the discrete Euclidean ball of radius r."""
    if r <= 0:
        raise ValueError("ball radius must be positive")
    dsq = int(sum((int(a) - int(b)) ** 2 for a, b in zip(x, y)))
    if float(r).is_integer():
        return dsq < int(r) ** 2
    return float(dsq) < r * r


def ball_sites(x: PointLike, r: float, d: Optional[int] = None) -> Configuration:
    """All lattice sites strictly within Euclidean distance r of x."""
    if r <= 0:
        raise ValueError("ball radius must be positive")
    x = tuple(int(c) for c in x)
    if d is None:
        d = len(x)
    reach = int(math.ceil(r)) - 1 if float(r).is_integer() else int(math.floor(r))
    span = np.arange(-reach, reach + 1)
    grids = np.meshgrid(*([span] * d), indexing="ij")
    offsets = np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)
    dsq = np.sum(offsets * offsets, axis=1)
    if float(r).is_integer():
        keep = dsq < int(r) ** 2
    else:
        keep = dsq.astype(float) < r * r
    return Configuration(offsets[keep] + np.asarray(x, dtype=np.int64))


def _adjacency_components(pts: np.ndarray) -> list:
    """Connected components under nearest-neighbor adjacency; list of index lists."""
    n = pts.shape[0]
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            diff = pts[i] - pts[j]
            if int(diff @ diff) == 1:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[ri] = rj
    groups: dict = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def components(C: Configuration) -> list:
    """Maximal connected pieces of C, ordered by their lex-min point."""
    if C.n == 0:
        raise ValueError("empty configuration")
    parts = [Configuration(C.pts[idx], dim=C.d) for idx in _adjacency_components(C.pts)]
    parts.sort(key=lambda part: tuple(part.pts[0]))
    return parts


def component_of(C: Configuration, x: PointLike) -> Configuration:
    """The component containing x; empty when x is not in C."""
    if x not in C:
        return Configuration([], dim=C.d)
    for part in components(C):
        if x in part:
            return part
    raise AssertionError("unreachable: x in C but in no component")


def is_e1_segment(C: Configuration) -> bool:
    """True iff C is a translate of {0, e1, ..., (k-1) e1}."""
    if C.n == 0:
        raise ValueError("empty configuration")
    a = C.pts
    if a.shape[0] == 1:
        return True
    if np.any(a[:, 1:] != a[0, 1:]):
        return False
    first = a[:, 0]  # sorted ascending since rows are lex-sorted
    return bool(np.all(np.diff(first) == 1))


def lex_min(C: Configuration) -> Point:
    """The lexicographically least point."""
    if C.n == 0:
        raise ValueError("empty configuration")
    return tuple(int(c) for c in C.pts[0])


@dataclass(frozen=True)
class TranslationClass:
    """A configuration modulo translation, represented by the translate
    whose lex-min point is the origin."""

    canonical: Configuration

    @classmethod
    def of(cls, C: Configuration) -> "TranslationClass":
        if C.n == 0:
            raise ValueError("empty configuration")
        return cls(Configuration(C.pts - C.pts[0]))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TranslationClass) and self.canonical == other.canonical

    def __hash__(self) -> int:
        return hash(("class", self.canonical._key))


def format_configuration(C: Configuration) -> str:
    lines = [f"d={C.d}"]
    lines.extend(" ".join(str(int(c)) for c in row) for row in C.pts)
    return "\n".join(lines) + "\n"


def parse_configuration(text: str) -> Configuration:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("d="):
        raise ValueError("configuration text must start with a 'd=<dim>' header")
    d = int(lines[0][2:])
    if d < 1:
        raise ValueError("dimension must be >= 1")
    pts = []
    for ln in lines[1:]:
        coords = tuple(int(tok) for tok in ln.split())
        if len(coords) != d:
            raise ValueError(f"point {coords} does not have dimension {d}")
        pts.append(coords)
    return Configuration(pts, dim=d)
