"""The CAT Markov chain kernel.

A state is a finite subset of Z^d with at least m+1 points.  One step
activates (removes) m points one at a time — the first uniformly, each
next one weighted by max{dist, 1}^(-beta) from the previously activated
point — then transports (adds) m points one at a time onto the outer
boundary of the current set, anchored first at the last activated point
and then at the previously transported one.

Public surface: ModelParams, phi / mu_pmf / mu_sample, cat_step,
cat_run, and the exact enumeration oracle (enumerate_step_distribution,
transition_probability).
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from ..lattice import Configuration, boundary as lattice_boundary, diameter_sq as _diam_sq_cfg
from ..rng import RngStream
from ._common import resolve_backend, weight_mode
from .oracle import (EnumerationInfeasible, EnumeratedLaw,
                     enumerate_step_distribution, transition_probability,
                     exact_weights_available, predicted_trace_count)

__all__ = [
    "ModelParams", "StepTrace", "TrajectoryRecord", "RngStream",
    "phi", "mu_pmf", "mu_sample", "cat_step", "cat_run", "one_step_arrays",
    "enumerate_step_distribution", "transition_probability",
    "EnumerationInfeasible", "EnumeratedLaw", "exact_weights_available",
    "predicted_trace_count", "resolve_backend", "weight_mode",
]

log = logging.getLogger("catsim")

_WARNED_REGIMES: set = set()

DEBUG_CHECKS = os.environ.get("CATSIM_DEBUG_CHECKS", "") not in ("", "0")


@dataclass(frozen=True)
class ModelParams:
    """CAT parameters: lattice dimension d, moved elements per step m,
    weight exponent beta."""

    d: int
    m: int
    beta: float

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension d must be >= 1")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if not self.theorem_regime:
            key = (self.d, self.m, float(self.beta))
            if key not in _WARNED_REGIMES:
                _WARNED_REGIMES.add(key)
                log.warning("params d=%d, beta=%g are outside the proven regime "
                            "(d >= 3 and beta > 2); simulating anyway", self.d, self.beta)

    @property
    def theorem_regime(self) -> bool:
        return self.d >= 3 and self.beta > 2

    @property
    def mode(self) -> int:
        return weight_mode(self.beta)


@dataclass
class StepTrace:
    """The m activated and m transported points of one step, in order."""

    t: int
    activated: np.ndarray    # (m, d) int64
    transported: np.ndarray  # (m, d) int64

    def key(self) -> bytes:
        return self.activated.tobytes() + self.transported.tobytes()


@dataclass
class TrajectoryRecord:
    """Per-step observables of one trajectory.

    Index i of the arrays describes the state at time i (0 = initial);
    arrays have length T+1.
    """

    params: ModelParams
    initial: Configuration
    final: Configuration
    T: int
    master_seed: int
    stream_id: int
    backend: str
    diameter_sq: np.ndarray   # (T+1,) int64
    n_components: np.ndarray  # (T+1,) int32
    n_small: np.ndarray       # (T+1,) int32; points in components of size <= m
    mass_violations: int = 0
    amlg_violations: int = 0
    snapshots: list = field(default_factory=list)  # [(t, Configuration)]
    traces: Optional[list] = None                  # [StepTrace] when recorded

    def diameters(self) -> np.ndarray:
        return np.sqrt(self.diameter_sq.astype(np.float64))


INFINITY = None  # anchor sentinel for the uniform measure


def _dsq_points(u: Sequence[int], v: Sequence[int]) -> int:
    return sum((int(a) - int(b)) ** 2 for a, b in zip(u, v))


def phi(u: Sequence[int], v: Sequence[int], beta: float) -> float:
    """Substep weight max{||u - v||, 1}^(-beta), from the exact squared
    distance."""
    dsq = _dsq_points(u, v)
    if dsq <= 1:
        return 1.0
    return math.exp(-0.5 * beta * math.log(dsq))


def _log_weights(support: list, anchor, beta: float) -> list:
    if anchor is INFINITY or (isinstance(anchor, float) and math.isinf(anchor)):
        return [0.0] * len(support)
    return [-0.5 * beta * math.log(max(_dsq_points(anchor, q), 1)) for q in support]


def mu_pmf(support: Configuration, anchor, beta: float) -> dict:
    """The measure on `support` proportional to phi(anchor, .); uniform
    when anchor is INFINITY (None)."""
    if len(support) == 0:
        raise ValueError("empty support")
    pts = sorted(support)
    lw = _log_weights(pts, anchor, beta)
    mx = max(lw)
    ws = [math.exp(v - mx) for v in lw]
    tot = sum(ws)
    return {p: w / tot for p, w in zip(pts, ws)}


def mu_sample(support: Configuration, anchor, beta: float, rng: RngStream):
    """One draw from mu_pmf via cumulative sums over the log-stabilized
    weights."""
    if len(support) == 0:
        raise ValueError("empty support")
    pts = sorted(support)
    lw = _log_weights(pts, anchor, beta)
    mx = max(lw)
    ws = [math.exp(v - mx) for v in lw]
    tot = sum(ws)
    u = rng.next_u01()
    thr = u * tot
    acc = 0.0
    for p, w in zip(pts, ws):
        acc += w
        if acc > thr:
            return p
    return pts[-1]


# ---------------------------------------------------------------------------
# steppers

_NUMBA_SCRATCH: dict = {}


def _numba_mod():
    from . import _stepper_numba
    return _stepper_numba


def _numba_scratch(n: int, d: int, m: int) -> dict:
    key = (n, d, m)
    sc = _NUMBA_SCRATCH.get(key)
    if sc is None:
        sc = _numba_mod().make_scratch(n, d, m)
        _NUMBA_SCRATCH[key] = sc
    return sc


def one_step_arrays(pts: np.ndarray, params: ModelParams, master: int, stream: int,
                    t: int, backend: Optional[str] = None):
    """One CAT step on a lex-sorted (n, d) int64 array.

    Returns (new_pts, activated, transported); the low-level entry shared
    by cat_step and the copycat dynamics.
    """
    backend = resolve_backend(backend)
    n, d = pts.shape
    if backend == "numba":
        nb = _numba_mod()
        sc = _numba_scratch(n, d, params.m)
        cur = pts.copy()
        st = nb.step(cur, n, d, params.m, params.mode, float(params.beta),
                     np.uint64(master & 0xFFFFFFFFFFFFFFFF), np.uint64(stream),
                     t, sc["act"], sc["trans"], sc["bnd"], sc["wbuf"],
                     sc["key"], sc["anc"])
        if st != 0:
            raise AssertionError(f"stepper violation, status {st}")
        return cur, sc["act"].copy(), sc["trans"].copy()
    from . import _stepper_numpy
    return _stepper_numpy.step(pts, params.m, params.mode, float(params.beta),
                               master & 0xFFFFFFFFFFFFFFFF, stream, t)


def _check_step_invariants(params: ModelParams, pts_before: np.ndarray,
                           pts_after: np.ndarray) -> tuple:
    """Exact mass conservation and at-most-linear-growth checks.

    Returns (mass_ok, amlg_ok) using integer arithmetic only.
    """
    mass_ok = pts_after.shape == pts_before.shape
    if mass_ok and pts_after.shape[0] > 1:
        mass_ok = bool(np.all(np.any(pts_after[1:] != pts_after[:-1], axis=1)))
    b = _diam_sq_cfg(Configuration(pts_before))
    a = _diam_sq_cfg(Configuration(pts_after))
    m = params.m
    L = a - b - m * m
    amlg_ok = L <= 0 or L * L <= 4 * m * m * b
    return mass_ok, amlg_ok


def cat_step(C: Configuration, params: ModelParams, rng: RngStream,
             step: Optional[int] = None, backend: Optional[str] = None):
    """One CAT step.  Returns (next configuration, StepTrace).

    Consumes one step index from `rng` unless `step` is given (the
    copycat dynamics pass an explicit index).
    """
    if C.n <= params.m:
        raise ValueError("state below minimum size")
    if C.d != params.d:
        raise ValueError(f"configuration dimension {C.d} != params.d {params.d}")
    t = rng.take_step_index() if step is None else step
    new_pts, act, trans = one_step_arrays(C.pts, params, rng.master_seed,
                                          rng.stream_id, t, backend)
    mass_ok, amlg_ok = _check_step_invariants(params, C.pts, new_pts)
    if not mass_ok:
        raise AssertionError(f"mass conservation violated at step {t}")
    if not amlg_ok:
        raise AssertionError(f"diameter grew by more than m at step {t}")
    return Configuration(new_pts), StepTrace(t=t, activated=act, transported=trans)


def _census_py(pts: np.ndarray, m: int) -> tuple:
    from ..lattice import _adjacency_components
    groups = _adjacency_components(pts)
    nsmall = sum(len(g) for g in groups if len(g) <= m)
    return len(groups), nsmall


def cat_run(C0: Configuration, params: ModelParams, T: int, rng: RngStream,
            observers: Iterable[Callable] = (), snapshot_stride: int = 0,
            record_traces: bool = False, backend: Optional[str] = None) -> TrajectoryRecord:
    """Run T CAT steps, recording per-step squared diameter and component
    census; observers are called as observer(t, Configuration) after
    every step.
    """
    if C0.n <= params.m:
        raise ValueError("state below minimum size")
    if T < 0:
        raise ValueError("T must be >= 0")
    backend = resolve_backend(backend)
    observers = list(observers)
    n, d, m = C0.n, C0.d, params.m
    dsq = np.zeros(T + 1, dtype=np.int64)
    ncomp = np.zeros(T + 1, dtype=np.int32)
    nsmall = np.zeros(T + 1, dtype=np.int32)
    snapshots: list = []
    t0 = rng.counter
    rng.counter += T
    master = rng.master_seed & 0xFFFFFFFFFFFFFFFF
    stream = rng.stream_id

    def want_snap(t: int) -> bool:
        return snapshot_stride > 0 and t % snapshot_stride == 0

    if want_snap(0):
        snapshots.append((0, C0))

    mass_viol = 0
    amlg_viol = 0

    if backend == "numba" and not observers and not record_traces:
        nb = _numba_mod()
        sc = _numba_scratch(n, d, m)
        cur = C0.pts.copy()
        chunk = snapshot_stride if snapshot_stride > 0 else T
        done = 0
        while True:
            steps = min(chunk, T - done)
            st, mv, av = nb.run(cur, n, d, m, params.mode, float(params.beta),
                                np.uint64(master), np.uint64(stream),
                                t0 + done, steps,
                                dsq[done:done + steps + 1],
                                ncomp[done:done + steps + 1],
                                nsmall[done:done + steps + 1],
                                sc["act"], sc["trans"], sc["bnd"], sc["wbuf"],
                                sc["key"], sc["anc"], sc["parent"], sc["size"])
            if st != 0:
                raise AssertionError(f"stepper violation, status {st} near step {done}")
            mass_viol += mv
            amlg_viol += av
            done += steps
            if done >= T:
                break
            if want_snap(done):
                snapshots.append((done, Configuration(cur.copy())))
        final = Configuration(cur.copy())
        if T > 0 and want_snap(T):
            snapshots.append((T, final))
        traces = None
    else:
        cur_cfg = C0
        dsq[0] = _diam_sq_cfg(cur_cfg)
        ncomp[0], nsmall[0] = _census_py(cur_cfg.pts, m)
        traces = [] if record_traces else None
        for i in range(T):
            t = t0 + i
            new_pts, act, trans = one_step_arrays(cur_cfg.pts, params, master,
                                                  stream, t, backend)
            mass_ok, amlg_ok = _check_step_invariants(params, cur_cfg.pts, new_pts)
            mass_viol += 0 if mass_ok else 1
            amlg_viol += 0 if amlg_ok else 1
            cur_cfg = Configuration(new_pts)
            dsq[i + 1] = _diam_sq_cfg(cur_cfg)
            ncomp[i + 1], nsmall[i + 1] = _census_py(cur_cfg.pts, m)
            if traces is not None:
                traces.append(StepTrace(t=t, activated=act, transported=trans))
            if want_snap(i + 1) and (i + 1) < T:
                snapshots.append((i + 1, cur_cfg))
            for obs in observers:
                obs(i + 1, cur_cfg)
        final = cur_cfg
        if T > 0 and want_snap(T):
            snapshots.append((T, final))

    if T == 0:
        final = C0
        dsq[0] = _diam_sq_cfg(C0)
        ncomp[0], nsmall[0] = _census_py(C0.pts, m)

    return TrajectoryRecord(
        params=params, initial=C0, final=final, T=T,
        master_seed=rng.master_seed, stream_id=rng.stream_id, backend=backend,
        diameter_sq=dsq, n_components=ncomp, n_small=nsmall,
        mass_violations=mass_viol, amlg_violations=amlg_viol,
        snapshots=snapshots, traces=traces)
