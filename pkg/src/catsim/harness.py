"""Experiment orchestration: ensembles, phase sweeps, stationarity
diagnostics, reachability BFS, and the experiment config format.

Reproducibility contract: trajectory i of an ensemble always runs on
stream_id = i of the experiment's master seed, so results are identical
regardless of worker count or scheduling order.
"""

from __future__ import annotations

import concurrent.futures
import configparser
import itertools
import math
import os
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .lattice import (Configuration, TranslationClass, diameter_sq,
                      parse_configuration, segment)
from .kernel import (ModelParams, RngStream, TrajectoryRecord, cat_run,
                     enumerate_step_distribution, EnumerationInfeasible)
from .observables import has_progressive_boundary
from .copycat import TupleState, copycat_step


# ---------------------------------------------------------------------------
# initial conditions

@dataclass(frozen=True)
class InitialCondition:
    """How to build the starting configuration: a unit segment, a
    diameter-D two-group spread, or a configuration file."""

    kind: str                      # "segment" | "spread" | "file"
    diameter: int = 0              # spread only
    path: str = ""                 # file only

    def __post_init__(self):
        if self.kind not in ("segment", "spread", "file"):
            raise ValueError(f"unknown initial condition kind {self.kind!r}")
        if self.kind == "spread" and self.diameter < 1:
            raise ValueError("spread requires a positive diameter")
        if self.kind == "file" and not self.path:
            raise ValueError("file initial condition requires a path")

    def build(self, n: int, d: int) -> Configuration:
        if self.kind == "segment":
            return segment(n, d)
        if self.kind == "spread":
            return spread_configuration(n, d, self.diameter)
        with open(self.path, "r", encoding="utf-8") as fh:
            C = parse_configuration(fh.read())
        if C.n != n:
            raise ValueError(f"initial file holds {C.n} points, expected {n}")
        if C.d != d:
            raise ValueError(f"initial file has dimension {C.d}, expected {d}")
        return C


def spread_configuration(n: int, d: int, diameter: int) -> Configuration:
    """n points in two e_1-aligned groups of sizes ceil(n/2) and
    floor(n/2), placed so the overall diameter is exactly the given
    value.  The far group persists on its own exactly when floor(n/2)
    exceeds m, which is the n >= 2m+2 side of the phase line."""
    if n < 2:
        raise ValueError("spread needs at least two points")
    if diameter < n:
        raise ValueError("spread diameter must be at least n")
    a = (n + 1) // 2
    b = n // 2
    pts = [(i,) + (0,) * (d - 1) for i in range(a)]
    pts += [(diameter - b + 1 + i,) + (0,) * (d - 1) for i in range(b)]
    return Configuration(pts)


# ---------------------------------------------------------------------------
# ensembles

@dataclass(frozen=True)
class ExperimentSpec:
    """A reproducible ensemble: model, start, length, size, seed."""

    params: ModelParams
    n: int
    initial: InitialCondition
    T: int
    K: int = 1
    master_seed: int = 0
    snapshot_stride: int = 0
    record_traces: bool = False
    backend: Optional[str] = None

    def __post_init__(self):
        if self.n < self.params.m + 1:
            raise ValueError("n must be at least m+1")
        if self.T < 0:
            raise ValueError("T must be nonnegative")
        if self.K < 1:
            raise ValueError("ensemble size must be at least 1")

    def initial_configuration(self) -> Configuration:
        return self.initial.build(self.n, self.params.d)


def _run_one(spec: ExperimentSpec, stream_id: int) -> TrajectoryRecord:
    C0 = spec.initial_configuration()
    rng = RngStream(master_seed=spec.master_seed, stream_id=stream_id)
    return cat_run(C0, spec.params, spec.T, rng,
                   snapshot_stride=spec.snapshot_stride,
                   record_traces=spec.record_traces,
                   backend=spec.backend)


def run_ensemble(spec: ExperimentSpec, jobs: int = 1) -> list:
    """K trajectories on streams 0..K-1, in stream order regardless of
    how many workers produced them."""
    ids = list(range(spec.K))
    if jobs <= 1 or spec.K == 1:
        return [_run_one(spec, i) for i in ids]
    out = [None] * spec.K
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        futs = {pool.submit(_run_one, spec, i): i for i in ids}
        for fut in concurrent.futures.as_completed(futs):
            out[futs[fut]] = fut.result()
    return out


# ---------------------------------------------------------------------------
# phase sweep

@dataclass
class CellStats:
    """Per-(m, n) ensemble statistics and their classification.

    Collapse threshold 2n^2 and the growth comparison against the
    initial diameter follow the diameter dichotomy; medians decide the
    dominant label, and per-seed fractions are kept for diagnostics.
    """

    m: int
    n: int
    defined: bool
    collapse_threshold: int = 0
    initial_diameter: float = 0.0
    min_diameter: np.ndarray = field(default_factory=lambda: np.zeros(0))
    final_diameter: np.ndarray = field(default_factory=lambda: np.zeros(0))
    lasthalf_min: np.ndarray = field(default_factory=lambda: np.zeros(0))
    visits_below: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    collapse_dominant: bool = False
    growth_dominant: bool = False

    @property
    def label(self) -> str:
        if not self.defined:
            return "undefined"
        if self.collapse_dominant and self.growth_dominant:
            return "both"
        if self.growth_dominant:
            return "growth"
        if self.collapse_dominant:
            return "collapse"
        return "neither"

    def collapse_fraction(self) -> float:
        ok = (self.min_diameter <= self.collapse_threshold) & (self.visits_below >= 10)
        return float(np.mean(ok)) if ok.size else 0.0

    def growth_fraction(self) -> float:
        ok = ((self.final_diameter > self.initial_diameter)
              & (self.lasthalf_min >= self.initial_diameter / 2))
        return float(np.mean(ok)) if ok.size else 0.0


@dataclass
class SweepResult:
    base: ExperimentSpec
    m_values: tuple
    n_values_by_m: dict
    cells: dict                     # (m, n) -> CellStats

    def boundary(self, m: int) -> Optional[int]:
        """Smallest n classified growth-dominant; growth takes
        precedence over a simultaneous collapse label."""
        for n in self.n_values_by_m[m]:
            cell = self.cells[(m, n)]
            if cell.defined and cell.growth_dominant:
                return n
        return None


def classify_cell(m: int, n: int, T: int, initial_diameter: float,
                  diameter_sq_rows: Sequence[np.ndarray]) -> CellStats:
    """Pure function of stored trajectories; re-running it on the same
    records gives the same labels."""
    cell = CellStats(m=m, n=n, defined=n > m)
    if not cell.defined:
        return cell
    thr = 2 * n * n
    cell.collapse_threshold = thr
    cell.initial_diameter = initial_diameter
    mins, fins, lhs, vis = [], [], [], []
    for dsq in diameter_sq_rows:
        mins.append(math.sqrt(float(dsq.min())))
        fins.append(math.sqrt(float(dsq[-1])))
        lhs.append(math.sqrt(float(dsq[T // 2:].min())))
        vis.append(int(np.count_nonzero(dsq[1:] <= thr * thr)))
    cell.min_diameter = np.array(mins)
    cell.final_diameter = np.array(fins)
    cell.lasthalf_min = np.array(lhs)
    cell.visits_below = np.array(vis, dtype=np.int64)
    cell.collapse_dominant = bool(np.median(cell.min_diameter) <= thr)
    cell.growth_dominant = bool(np.median(cell.final_diameter) > initial_diameter)
    return cell


def sweep(base: ExperimentSpec, m_values: Sequence[int],
          n_values: Optional[Sequence[int]] = None, jobs: int = 1) -> SweepResult:
    """Ensemble per (m, n) cell over m_values x n_values; n_values
    defaults to m+1..2m+4 per m.  Cells with n <= m are undefined."""
    cells = {}
    n_by_m = {}
    for m in m_values:
        ns = tuple(n_values) if n_values is not None else tuple(range(m + 1, 2 * m + 5))
        n_by_m[m] = ns
        for n in ns:
            if n <= m:
                cells[(m, n)] = CellStats(m=m, n=n, defined=False)
                continue
            params = replace(base.params, m=m)
            spec = replace(base, params=params, n=n)
            records = run_ensemble(spec, jobs=jobs)
            C0 = spec.initial_configuration()
            d0 = math.sqrt(float(diameter_sq(C0)))
            cells[(m, n)] = classify_cell(
                m, n, spec.T, d0, [r.diameter_sq for r in records])
    return SweepResult(base=base, m_values=tuple(m_values),
                       n_values_by_m=n_by_m, cells=cells)


# ---------------------------------------------------------------------------
# stationarity diagnostic

@dataclass
class StationarityReport:
    tv_diameter: float
    histogram_a: dict
    histogram_b: dict
    tv_class: Optional[float] = None


def _diameter_histogram(records: Sequence[TrajectoryRecord], T: int) -> dict:
    counts: dict = {}
    for r in records:
        window = r.diameter_sq[T // 2:]
        for v in window:
            key = math.isqrt(int(v))
            counts[key] = counts.get(key, 0) + 1
    total = sum(counts.values())
    return {k: c / total for k, c in counts.items()}


def total_variation(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def stationarity_check(spec_a: ExperimentSpec, spec_b: ExperimentSpec,
                       jobs: int = 1, classes: bool = False) -> StationarityReport:
    """Compare empirical diameter laws over the second half of the run
    from two initial conditions sharing (d, m, beta, n)."""
    if (spec_a.params, spec_a.n) != (spec_b.params, spec_b.n):
        raise ValueError("specs must share model parameters and n")
    if spec_a.T != spec_b.T:
        raise ValueError("specs must share T")
    recs_a = run_ensemble(spec_a, jobs=jobs)
    recs_b = run_ensemble(spec_b, jobs=jobs)
    ha = _diameter_histogram(recs_a, spec_a.T)
    hb = _diameter_histogram(recs_b, spec_b.T)
    report = StationarityReport(tv_diameter=total_variation(ha, hb),
                                histogram_a=ha, histogram_b=hb)
    if classes:
        report.tv_class = _class_tv(spec_a, spec_b)
    return report


def _class_histogram(spec: ExperimentSpec) -> dict:
    counts: dict = {}
    total = 0
    s = replace(spec, snapshot_stride=1)
    for rec in run_ensemble(s):
        for t, C in rec.snapshots:
            if t <= spec.T // 2:
                continue
            key = TranslationClass.of(C)
            counts[key] = counts.get(key, 0) + 1
            total += 1
    return {k: c / total for k, c in counts.items()}


def _class_tv(spec_a: ExperimentSpec, spec_b: ExperimentSpec) -> float:
    return total_variation(_class_histogram(spec_a), _class_histogram(spec_b))


# ---------------------------------------------------------------------------
# reachability BFS over translation classes

@dataclass
class ReachabilityReport:
    """BFS cover of the within-cap translation classes, with one
    explicit positive-probability witness per discovered class."""

    start: TranslationClass
    visited: set
    witnesses: dict                 # class -> (predecessor class, activated, transported, prob)
    diameter_cap: int
    partial: bool
    expanded: int
    emitted_outside_prog: list

    def covers(self, target: set) -> bool:
        return target <= self.visited


def _outcome_of_trace(C: Configuration, activated, transported) -> Configuration:
    pts = {tuple(int(v) for v in row) for row in C.pts}
    for a in activated:
        pts.discard(tuple(a))
    for b in transported:
        pts.add(tuple(b))
    return Configuration(sorted(pts), dim=C.d)


def reachability_bfs(params: ModelParams, n: int, diameter_cap: int,
                     class_cap: int = 20000,
                     oracle_cap: float = 1e7) -> ReachabilityReport:
    """Breadth-first closure of the one-step relation from the class of
    the n-segment, pruned at the diameter cap.

    Every discovered class keeps a witness transition (predecessor,
    activated sequence, transported sequence, probability > 0).
    Successor classes are checked against the progressive-boundary
    predicate; offenders are collected rather than asserted here.
    """
    start = TranslationClass.of(segment(n, params.d))
    capsq = diameter_cap * diameter_cap
    if int(diameter_sq(start.canonical)) > capsq:
        raise ValueError("start class exceeds the diameter cap")
    visited = {start}
    witnesses: dict = {}
    frontier = [start]
    partial = False
    expanded = 0
    outside: list = []
    while frontier:
        nxt: list = []
        for cls in frontier:
            rep = cls.canonical
            law = enumerate_step_distribution(rep, params, cap=oracle_cap,
                                              store_traces=True)
            expanded += 1
            seen_here: set = set()
            for act, trans, prob in law.traces:
                if prob <= 0:
                    continue
                out = TranslationClass.of(_outcome_of_trace(rep, act, trans))
                if out in seen_here:
                    continue
                seen_here.add(out)
                ok, _ = has_progressive_boundary(out.canonical, params.m)
                if not ok:
                    outside.append((cls, out))
                if int(diameter_sq(out.canonical)) > capsq:
                    continue
                if out not in visited:
                    visited.add(out)
                    witnesses[out] = (cls, act, trans, prob)
                    nxt.append(out)
                    if len(visited) >= class_cap:
                        partial = True
                        nxt = []
                        break
            if partial:
                break
        if partial:
            break
        frontier = nxt
    return ReachabilityReport(start=start, visited=visited, witnesses=witnesses,
                              diameter_cap=diameter_cap, partial=partial,
                              expanded=expanded, emitted_outside_prog=outside)


def enumerate_prog_classes(params: ModelParams, n: int, diameter_cap: int,
                           guard: int = 2_000_000) -> set:
    """All translation classes of n-point sets with diameter <= cap and
    a progressive boundary, enumerated exhaustively.

    Uses the canonical representative (lex-min point at the origin), so
    each class is produced exactly once.
    """
    d = params.d
    capsq = diameter_cap * diameter_cap
    lo, hi = -diameter_cap, diameter_cap
    box = []
    origin = (0,) * d
    for idx in np.ndindex(*((hi - lo + 1,) * d)):
        p = tuple(int(i) + lo for i in idx)
        if sum(v * v for v in p) <= capsq:
            box.append(p)
    box = [p for p in box if p > origin]
    count = math.comb(len(box), n - 1)
    if count > guard:
        raise EnumerationInfeasible(
            f"enumeration infeasible: {count} candidate sets exceed the guard")
    out: set = set()
    for rest in itertools.combinations(box, n - 1):
        pts = (origin,) + rest
        C = Configuration(pts, dim=d)
        if int(diameter_sq(C)) > capsq:
            continue
        ok, _ = has_progressive_boundary(C, params.m)
        if ok:
            out.add(TranslationClass.of(C))
    return out


# ---------------------------------------------------------------------------
# copycat trajectory runner

def copycat_run(state0: TupleState, params: ModelParams, T: int,
                rng: RngStream, backend: Optional[str] = None) -> list:
    """T copycat steps; returns the list of T+1 TupleStates."""
    states = [state0]
    cur = state0
    for _ in range(T):
        cur, _tr = copycat_step(cur, params, rng, backend=backend)
        states.append(cur)
    return states


# ---------------------------------------------------------------------------
# experiment config files

_TRUE = {"1", "true", "yes", "on"}


def load_experiment_config(path: str) -> ExperimentSpec:
    """Read a key = value sections config into an ExperimentSpec.

    Sections: [params] d, m, beta; [initial] n, kind, diameter, path;
    [ensemble] steps, size, master_seed, snapshot_stride, record_traces,
    backend.  CATSIM_SEED overrides the master seed.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = cp.read(path)
    if not read:
        raise ValueError(f"cannot read config file {path!r}")
    try:
        params = ModelParams(d=cp.getint("params", "d"),
                             m=cp.getint("params", "m"),
                             beta=cp.getfloat("params", "beta"))
        n = cp.getint("initial", "n")
        kind = cp.get("initial", "kind", fallback="segment").strip()
        initial = InitialCondition(
            kind=kind,
            diameter=cp.getint("initial", "diameter", fallback=0),
            path=cp.get("initial", "path", fallback=""))
        T = cp.getint("ensemble", "steps")
        K = cp.getint("ensemble", "size", fallback=1)
        master = cp.getint("ensemble", "master_seed", fallback=0)
        stride = cp.getint("ensemble", "snapshot_stride", fallback=0)
        traces = cp.get("ensemble", "record_traces", fallback="0").lower() in _TRUE
        backend = cp.get("ensemble", "backend", fallback="").strip() or None
    except (configparser.Error, ValueError) as exc:
        raise ValueError(f"invalid experiment config: {exc}") from exc
    env_seed = os.environ.get("CATSIM_SEED")
    if env_seed is not None:
        master = int(env_seed)
    return ExperimentSpec(params=params, n=n, initial=initial, T=T, K=K,
                          master_seed=master, snapshot_stride=stride,
                          record_traces=traces, backend=backend)
