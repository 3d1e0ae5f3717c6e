"""Multi-cluster dynamics: the lifted partition chain and copycat.

The lifted chain runs plain CAT on the union of a disjoint partition
and re-assigns colors by the slot rule (the point transported in slot j
inherits the color activated in slot j), which conserves per-color
counts and leaves the union's law untouched.

Copycat replaces the interaction entirely: a single cluster, chosen
with probability proportional to its size, advances by one CAT step in
its own copy of the lattice while the others stand still.  Clusters are
stored in global coordinates (they may overlap), so separations remain
comparable with the exact chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .lattice import (Configuration, diameter_sq, distance_sq,
                      format_configuration, parse_configuration)
from .kernel import (ModelParams, RngStream, StepTrace, cat_step,
                     enumerate_step_distribution)
from .kernel.oracle import DEFAULT_TRACE_CAP
from . import rng as _rng


@dataclass(frozen=True)
class TupleState:
    """Ordered clusters, each a nonempty Configuration of the same
    dimension."""

    clusters: tuple

    def __post_init__(self):
        if not self.clusters:
            raise ValueError("at least one cluster required")
        dims = {c.d for c in self.clusters}
        if len(dims) != 1:
            raise ValueError("clusters must share one dimension")
        if any(c.n == 0 for c in self.clusters):
            raise ValueError("clusters must be nonempty")

    @property
    def d(self) -> int:
        return self.clusters[0].d

    @property
    def k(self) -> int:
        return len(self.clusters)

    def sizes(self) -> tuple:
        return tuple(c.n for c in self.clusters)

    def union(self) -> Configuration:
        rows = np.concatenate([c.pts for c in self.clusters], axis=0)
        return Configuration(rows)

    def replace(self, i: int, cluster: Configuration) -> "TupleState":
        cl = list(self.clusters)
        cl[i] = cluster
        return TupleState(tuple(cl))


@dataclass
class CopyStepTrace:
    """One copycat step: which cluster moved and how."""

    chosen: int
    trace: StepTrace


def others_union(state: TupleState, i: int) -> Configuration:
    rows = [c.pts for j, c in enumerate(state.clusters) if j != i]
    if not rows:
        return Configuration([], dim=state.d)
    return Configuration(np.concatenate(rows, axis=0))


def sep_sq(state: TupleState):
    """Exact squared separation: min over clusters of squared distance
    to the union of the others; +inf for a single cluster."""
    if state.k == 1:
        return math.inf
    return min(distance_sq(c, others_union(state, i))
               for i, c in enumerate(state.clusters))


def sep(state: TupleState) -> float:
    s = sep_sq(state)
    return math.inf if s == math.inf else math.sqrt(s)


def in_tup_ab(state: TupleState, a: float, b: float) -> bool:
    """Separation >= a, and every cluster's diameter <= b * ln(distance
    to the rest).  Vacuously true for a single cluster."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if state.k == 1:
        return True
    if sep_sq(state) < a * a:
        return False
    for i, c in enumerate(state.clusters):
        dsq = distance_sq(c, others_union(state, i))
        if dsq == 0:
            return False
        dist = math.sqrt(dsq)
        if math.sqrt(diameter_sq(c)) > b * math.log(dist):
            return False
    return True


def validate_sizes(state: TupleState, params: ModelParams) -> None:
    if any(c.n <= params.m for c in state.clusters):
        raise ValueError("every cluster must have more than m elements")


def lift_partition(C: Configuration, parts: Sequence[Configuration],
                   params: ModelParams) -> TupleState:
    """A lifted state from a disjoint partition of C into parts of more
    than m elements each."""
    total = sum(p.n for p in parts)
    union_rows = np.concatenate([p.pts for p in parts], axis=0) if parts else None
    if not parts or total != C.n or Configuration(union_rows) != C:
        raise ValueError("parts must partition the configuration")
    state = TupleState(tuple(parts))
    validate_sizes(state, params)
    return state


def lifted_step(state: TupleState, params: ModelParams, rng: RngStream,
                backend: Optional[str] = None):
    """One step of the lifted chain: CAT on the union, colors
    re-assigned by the slot rule.  Returns (TupleState, StepTrace)."""
    union = state.union()
    if union.n != sum(state.sizes()):
        raise ValueError("lifted clusters must be disjoint")
    new_union, trace = cat_step(union, params, rng, backend=backend)
    color: dict = {}
    for i, c in enumerate(state.clusters):
        for p in c:
            color[p] = i
    acts = [tuple(int(v) for v in row) for row in trace.activated]
    trans = [tuple(int(v) for v in row) for row in trace.transported]
    slot_colors = []
    for p in acts:
        slot_colors.append(color.pop(p))
    for q, col in zip(trans, slot_colors):
        color[q] = col
    groups: dict = {i: [] for i in range(state.k)}
    for p, col in color.items():
        groups[col].append(p)
    new_clusters = tuple(Configuration(sorted(groups[i]), dim=state.d)
                         for i in range(state.k))
    new_state = TupleState(new_clusters)
    if new_state.union() != new_union:
        raise AssertionError("slot recoloring lost points")
    return new_state, trace


COPYCAT_CHOICE_LANE_OFFSET = 0  # J_t uses substep lane 2m of the step's key


def copycat_step(state: TupleState, params: ModelParams, rng: RngStream,
                 backend: Optional[str] = None):
    """One copycat step: pick cluster J with P(J=i) = |D^i| / sum |D^j|,
    advance it by one CAT step, leave the others untouched."""
    validate_sizes(state, params)
    t = rng.take_step_index()
    sizes = state.sizes()
    u = _rng.u01(rng.master_seed, rng.stream_id, t, 2 * params.m)
    thr = u * sum(sizes)
    acc = 0.0
    chosen = state.k - 1
    for i, s in enumerate(sizes):
        acc += s
        if acc > thr:
            chosen = i
            break
    new_cluster, trace = cat_step(state.clusters[chosen], params, rng,
                                  step=t, backend=backend)
    return state.replace(chosen, new_cluster), CopyStepTrace(chosen=chosen, trace=trace)


def enumerate_copycat_step(state: TupleState, params: ModelParams,
                           cap: float = DEFAULT_TRACE_CAP):
    """Exact one-step copycat law: mixture over the size-biased cluster
    choice of the per-cluster CAT laws.

    Returns (by_tuple, exact) where by_tuple maps an ordered tuple of
    cluster Configurations to its probability.
    """
    validate_sizes(state, params)
    total = sum(state.sizes())
    laws = [enumerate_step_distribution(c, params, cap=cap) for c in state.clusters]
    exact = all(law.exact for law in laws)
    by_tuple: dict = {}
    for i, law in enumerate(laws):
        w = Fraction(state.sizes()[i], total) if exact else state.sizes()[i] / total
        for cluster, p in law.by_state.items():
            cl = list(state.clusters)
            cl[i] = cluster
            key = tuple(cl)
            by_tuple[key] = by_tuple.get(key, 0) + w * p
    return by_tuple, exact


def format_tuple_state(state: TupleState) -> str:
    blocks = [format_configuration(c) for c in state.clusters]
    return f"clusters={state.k}\n" + "\n".join(blocks)


def parse_tuple_state(text: str) -> TupleState:
    lines = text.splitlines()
    if not lines or not lines[0].strip().startswith("clusters="):
        raise ValueError("tuple-state text must start with a 'clusters=<k>' header")
    k = int(lines[0].strip()[len("clusters="):])
    blocks = []
    block: list = []
    for ln in lines[1:]:
        if not ln.strip():
            if block:
                blocks.append("\n".join(block))
                block = []
            continue
        block.append(ln)
    if block:
        blocks.append("\n".join(block))
    if len(blocks) != k:
        raise ValueError(f"expected {k} cluster blocks, found {len(blocks)}")
    return TupleState(tuple(parse_configuration(b) for b in blocks))
