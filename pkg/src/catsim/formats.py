"""On-disk formats: JSON-lines trajectories and CSV summaries.

Every file opens with a versioned format tag.  Trajectory files
round-trip exactly; CSV files are one-way plot fodder except the
derived-walk table, which reads back exactly as well.
"""

from __future__ import annotations

import csv
import json
from typing import Optional, Sequence, TextIO

import numpy as np

from .lattice import Configuration
from .kernel import ModelParams, StepTrace, TrajectoryRecord

TRAJECTORY_FORMAT = "catsim.trajectory"
SWEEP_FORMAT = "catsim.sweep"
WALK_FORMAT = "catsim.walk"
FORMAT_VERSION = 1


def _pts(C: Configuration) -> list:
    return [[int(v) for v in row] for row in C.pts]


def write_trajectory(rec: TrajectoryRecord, fh: TextIO,
                     events: Optional[Sequence[dict]] = None) -> None:
    """One JSON object per line: header, then per-step records carrying
    the observable series, snapshots, traces, and optional event flags."""
    p = rec.params
    header = {
        "format": TRAJECTORY_FORMAT, "version": FORMAT_VERSION,
        "d": p.d, "m": p.m, "beta": p.beta,
        "n": rec.initial.n, "T": rec.T,
        "master_seed": rec.master_seed, "stream_id": rec.stream_id,
        "backend": rec.backend,
        "initial": _pts(rec.initial), "final": _pts(rec.final),
        "mass_violations": rec.mass_violations,
        "amlg_violations": rec.amlg_violations,
    }
    fh.write(json.dumps(header) + "\n")
    snap_at = {t: C for t, C in rec.snapshots}
    trace_at = {tr.t: tr for tr in rec.traces} if rec.traces else {}
    event_at = {}
    if events:
        event_at = {e["t"]: {k: v for k, v in e.items() if k != "t"} for e in events}
    for t in range(rec.T + 1):
        row = {
            "t": t,
            "diameter_sq": int(rec.diameter_sq[t]),
            "n_components": int(rec.n_components[t]),
            "n_small": int(rec.n_small[t]),
        }
        if t in snap_at:
            row["snapshot"] = _pts(snap_at[t])
        if t in trace_at:
            tr = trace_at[t]
            row["activated"] = [[int(v) for v in q] for q in tr.activated]
            row["transported"] = [[int(v) for v in q] for q in tr.transported]
        if t in event_at:
            row["events"] = event_at[t]
        fh.write(json.dumps(row) + "\n")


def read_trajectory(fh: TextIO) -> TrajectoryRecord:
    header = json.loads(fh.readline())
    if header.get("format") != TRAJECTORY_FORMAT:
        raise ValueError("not a trajectory file")
    if header.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported trajectory version {header.get('version')}")
    params = ModelParams(d=header["d"], m=header["m"], beta=header["beta"])
    T = header["T"]
    dsq = np.zeros(T + 1, dtype=np.int64)
    ncomp = np.zeros(T + 1, dtype=np.int32)
    nsmall = np.zeros(T + 1, dtype=np.int32)
    snapshots = []
    traces = []
    for line in fh:
        if not line.strip():
            continue
        row = json.loads(line)
        t = row["t"]
        dsq[t] = row["diameter_sq"]
        ncomp[t] = row["n_components"]
        nsmall[t] = row["n_small"]
        if "snapshot" in row:
            snapshots.append((t, Configuration(row["snapshot"], dim=params.d)))
        if "activated" in row:
            traces.append(StepTrace(
                t=t,
                activated=np.array(row["activated"], dtype=np.int64),
                transported=np.array(row["transported"], dtype=np.int64)))
    return TrajectoryRecord(
        params=params,
        initial=Configuration(header["initial"], dim=params.d),
        final=Configuration(header["final"], dim=params.d),
        T=T, master_seed=header["master_seed"], stream_id=header["stream_id"],
        backend=header["backend"], diameter_sq=dsq, n_components=ncomp,
        n_small=nsmall, mass_violations=header["mass_violations"],
        amlg_violations=header["amlg_violations"],
        snapshots=snapshots, traces=traces or None)


def write_trajectory_csv(records: Sequence[TrajectoryRecord], fh: TextIO) -> None:
    """Long-form per-step series: one row per (stream, t)."""
    fh.write(f"# format={TRAJECTORY_FORMAT}.csv version={FORMAT_VERSION}\n")
    w = csv.writer(fh)
    w.writerow(["stream_id", "t", "diameter_sq", "n_components", "n_small"])
    for rec in records:
        for t in range(rec.T + 1):
            w.writerow([rec.stream_id, t, int(rec.diameter_sq[t]),
                        int(rec.n_components[t]), int(rec.n_small[t])])


def write_sweep_csv(result, fh: TextIO) -> None:
    """One row per (m, n, seed) plus the per-cell labels."""
    fh.write(f"# format={SWEEP_FORMAT} version={FORMAT_VERSION}\n")
    w = csv.writer(fh)
    w.writerow(["m", "n", "seed", "min_diameter", "final_diameter",
                "lasthalf_min", "visits_below", "collapse_threshold",
                "label"])
    for (m, n), cell in sorted(result.cells.items()):
        if not cell.defined:
            w.writerow([m, n, "", "", "", "", "", "", "undefined"])
            continue
        for s in range(cell.min_diameter.size):
            w.writerow([m, n, s,
                        f"{cell.min_diameter[s]:.6g}",
                        f"{cell.final_diameter[s]:.6g}",
                        f"{cell.lasthalf_min[s]:.6g}",
                        int(cell.visits_below[s]),
                        cell.collapse_threshold,
                        cell.label])


def write_walk_csv(times: Sequence[int], walk: np.ndarray, fh: TextIO) -> None:
    """Derived-walk series: k, renewal time, then one column per
    coordinate of S_k."""
    fh.write(f"# format={WALK_FORMAT} version={FORMAT_VERSION}\n")
    d = walk.shape[1] if walk.size else 0
    w = csv.writer(fh)
    w.writerow(["k", "xi_k"] + [f"S_{i}" for i in range(d)])
    for k, (t, row) in enumerate(zip(times, walk)):
        w.writerow([k, t] + [int(v) for v in row])


def read_walk_csv(fh: TextIO) -> tuple:
    tag = fh.readline()
    if not tag.startswith(f"# format={WALK_FORMAT}"):
        raise ValueError("not a derived-walk file")
    rows = list(csv.reader(fh))
    head, body = rows[0], rows[1:]
    d = len(head) - 2
    times = [int(r[1]) for r in body]
    walk = np.array([[int(v) for v in r[2:]] for r in body],
                    dtype=np.int64).reshape(len(body), d)
    return times, walk
