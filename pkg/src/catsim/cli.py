"""Command-line front end.

Subcommands map one-to-one onto harness operations; flags mirror the
experiment config schema.  Exit codes: 0 success, 1 runtime failure,
2 validation failure (including bad flags).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import replace
from fractions import Fraction

import numpy as np

from . import __version__
from .lattice import Configuration, TranslationClass, segment
from .kernel import (ModelParams, RngStream, cat_run, cat_step,
                     enumerate_step_distribution, EnumerationInfeasible)
from .harness import (ExperimentSpec, InitialCondition,
                      enumerate_prog_classes, load_experiment_config,
                      reachability_bfs, run_ensemble, stationarity_check,
                      sweep)
from . import formats

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_VALIDATION = 2


class ValidationError(ValueError):
    pass


def _outdir(args) -> str:
    out = os.environ.get("CATSIM_OUTDIR") or args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _spec_from_args(args, need_steps: bool = True) -> ExperimentSpec:
    if getattr(args, "config", None):
        spec = load_experiment_config(args.config)
        if args.seed is not None:
            spec = replace(spec, master_seed=args.seed)
        if getattr(args, "backend", None):
            spec = replace(spec, backend=args.backend)
        return spec
    steps = getattr(args, "steps", None)
    missing = [f for f in ("d", "m", "beta", "n") if getattr(args, f) is None]
    if need_steps and steps is None:
        missing.append("steps")
    if missing:
        raise ValidationError(
            "missing required flags (or --config): " + ", ".join("--" + f for f in missing))
    params = ModelParams(d=args.d, m=args.m, beta=args.beta)
    if args.initial == "spread":
        init = InitialCondition(kind="spread", diameter=args.diameter)
    elif args.initial == "file":
        if not args.initial_file:
            raise ValidationError("--initial file requires --initial-file PATH")
        init = InitialCondition(kind="file", path=args.initial_file)
    else:
        init = InitialCondition(kind="segment")
    seed = args.seed if args.seed is not None else 0
    env_seed = os.environ.get("CATSIM_SEED")
    if args.seed is None and env_seed is not None:
        seed = int(env_seed)
    return ExperimentSpec(
        params=params, n=args.n, initial=init,
        T=steps if steps is not None else 0,
        K=args.seeds, master_seed=seed,
        snapshot_stride=args.snapshot_stride,
        backend=args.backend or None)


def _parse_int_range(text: str) -> list:
    # "1..3" or "2,4,6" or "5"
    if ".." in text:
        a, b = text.split("..", 1)
        return list(range(int(a), int(b) + 1))
    return [int(x) for x in text.split(",") if x]


def _add_model_flags(sp, steps: bool = True):
    sp.add_argument("--config", help="experiment config file (key = value sections)")
    sp.add_argument("--d", type=int, help="lattice dimension")
    sp.add_argument("--m", type=int, help="elements moved per step")
    sp.add_argument("--beta", type=float, help="weight decay exponent")
    sp.add_argument("--n", type=int, help="number of elements")
    if steps:
        sp.add_argument("--steps", type=int, help="steps per trajectory")
    sp.add_argument("--seeds", type=int, default=1, help="ensemble size (default 1)")
    sp.add_argument("--seed", type=int, help="master seed (env CATSIM_SEED)")
    sp.add_argument("--initial", choices=("segment", "spread", "file"),
                    default="segment", help="initial condition kind")
    sp.add_argument("--diameter", type=int, default=100,
                    help="spread initial diameter (default 100)")
    sp.add_argument("--initial-file", help="configuration file for --initial file")
    sp.add_argument("--snapshot-stride", type=int, default=0,
                    help="store every k-th configuration (0 = none)")
    sp.add_argument("--backend", choices=("numba", "numpy"),
                    help="stepper backend (env CATSIM_BACKEND)")
    sp.add_argument("--jobs", type=int, default=1, help="parallel workers")
    sp.add_argument("--out", help="output directory (env CATSIM_OUTDIR)")
    sp.add_argument("--dry-run", action="store_true",
                    help="validate configuration and exit")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="catsim",
        description="Simulation and exact analysis of chain activation and transport on Z^d.")
    ap.add_argument("--version", action="version", version=f"catsim {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="run an ensemble and write JSON-lines trajectories")
    _add_model_flags(sp)

    sp = sub.add_parser("enumerate", help="print the exact one-step law of a configuration")
    _add_model_flags(sp, steps=False)
    sp.add_argument("--by-class", action="store_true",
                    help="aggregate over translation classes")
    sp.add_argument("--cap", type=float, default=1e7,
                    help="enumeration feasibility cap")

    sp = sub.add_parser("sweep", help="phase sweep over (m, n) cells")
    _add_model_flags(sp)
    sp.add_argument("--m-range", default=None,
                    help="m values, e.g. 1..3 or 1,2 (default: --m)")
    sp.add_argument("--n-range", default="auto",
                    help="n values, e.g. 4..8, or auto for m+1..2m+4")

    sp = sub.add_parser("stationarity", help="diameter-law TV between two starts")
    _add_model_flags(sp)

    sp = sub.add_parser("reach", help="reachability BFS over translation classes")
    _add_model_flags(sp, steps=False)
    sp.add_argument("--cap", type=int, required=True, help="diameter cap")
    sp.add_argument("--class-cap", type=int, default=20000,
                    help="abort threshold on visited classes")
    sp.add_argument("--compare", action="store_true",
                    help="compare against exhaustive enumeration")

    sp = sub.add_parser("check", help="built-in invariant suite")
    sp.add_argument("--backend", choices=("numba", "numpy"))
    sp.add_argument("--out", help="unused; accepted for uniformity")
    sp.add_argument("--dry-run", action="store_true")

    sp = sub.add_parser("export", help="convert JSON-lines trajectories to CSV")
    sp.add_argument("inputs", nargs="+", help="trajectory .jsonl files")
    sp.add_argument("--out", help="output directory")
    sp.add_argument("--dry-run", action="store_true")
    return ap


# ---------------------------------------------------------------------------
# subcommand bodies

def _cmd_simulate(args) -> int:
    spec = _spec_from_args(args)
    if args.dry_run:
        print(f"ok: {spec.K} x {spec.T} steps of (d,m,beta)=({spec.params.d},"
              f"{spec.params.m},{spec.params.beta}) n={spec.n} from {spec.initial.kind}")
        return EXIT_OK
    out = _outdir(args)
    records = run_ensemble(spec, jobs=args.jobs)
    for rec in records:
        path = os.path.join(out, f"trajectory_{rec.stream_id:04d}.jsonl")
        with open(path, "w", encoding="utf-8") as fh:
            formats.write_trajectory(rec, fh)
    summary = os.path.join(out, "trajectories.csv")
    with open(summary, "w", encoding="utf-8") as fh:
        formats.write_trajectory_csv(records, fh)
    print(f"wrote {len(records)} trajectories to {out}")
    final_diams = [math.sqrt(float(r.diameter_sq[-1])) for r in records]
    print(f"final diameter: median {np.median(final_diams):.1f} "
          f"min {min(final_diams):.1f} max {max(final_diams):.1f}")
    return EXIT_OK


def _cmd_enumerate(args) -> int:
    spec = _spec_from_args(args, need_steps=False)
    C = spec.initial_configuration()
    if args.dry_run:
        print(f"ok: would enumerate {C.n} points in d={C.d}")
        return EXIT_OK
    law = enumerate_step_distribution(C, spec.params, cap=args.cap)
    dist = law.by_class if args.by_class else law.by_state
    kind = "class" if args.by_class else "state"

    def rep(K):
        return (K.canonical if args.by_class else K).pts.tolist()

    print(f"# format=catsim.law version=1 arithmetic={'exact' if law.exact else 'mpmath'}")
    items = sorted(dist.items(), key=lambda kv: (float(-kv[1]), rep(kv[0])))
    for K, prob in items:
        pts = rep(K)
        if law.exact:
            print(f"{kind} {pts} : {prob} = {float(prob):.6f}")
        else:
            print(f"{kind} {pts} : {float(prob):.10f}")
    total = law.total()
    print(f"# total {total if law.exact else float(total)}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    spec = _spec_from_args(args)
    m_values = _parse_int_range(args.m_range) if args.m_range else [spec.params.m]
    n_values = None if args.n_range == "auto" else _parse_int_range(args.n_range)
    if args.dry_run:
        cells = sum(len(n_values or range(m + 1, 2 * m + 5)) for m in m_values)
        print(f"ok: sweep over {cells} cells, {spec.K} seeds x {spec.T} steps each")
        return EXIT_OK
    result = sweep(spec, m_values, n_values, jobs=args.jobs)
    out = _outdir(args)
    path = os.path.join(out, "sweep.csv")
    with open(path, "w", encoding="utf-8") as fh:
        formats.write_sweep_csv(result, fh)
    print(f"wrote {path}")
    for m in m_values:
        row = []
        for n in result.n_values_by_m[m]:
            cell = result.cells[(m, n)]
            mark = "*" if n == 2 * m + 2 else " "
            row.append(f"n={n}{mark}:{cell.label}")
        b = result.boundary(m)
        print(f"m={m}: " + "  ".join(row) + f"  -> boundary {b} (n_c = {2*m+2})")
    return EXIT_OK


def _cmd_stationarity(args) -> int:
    spec = _spec_from_args(args)
    spec_a = replace(spec, initial=InitialCondition(kind="segment"))
    spec_b = replace(spec, initial=InitialCondition(kind="spread", diameter=args.diameter))
    if args.dry_run:
        print(f"ok: stationarity {spec.K} x {spec.T} steps, segment vs spread({args.diameter})")
        return EXIT_OK
    report = stationarity_check(spec_a, spec_b, jobs=args.jobs)
    print(f"TV(diameter) over t in [T/2, T]: {report.tv_diameter:.4f}")
    return EXIT_OK


def _cmd_reach(args) -> int:
    spec = _spec_from_args(args, need_steps=False)
    if args.dry_run:
        print(f"ok: reach n={spec.n} cap={args.cap}")
        return EXIT_OK
    report = reachability_bfs(spec.params, spec.n, args.cap,
                              class_cap=args.class_cap)
    print(f"visited {len(report.visited)} classes "
          f"(expanded {report.expanded}, partial={report.partial})")
    if report.emitted_outside_prog:
        print(f"WARNING: {len(report.emitted_outside_prog)} successors outside the progressive set")
    if args.compare:
        target = enumerate_prog_classes(spec.params, spec.n, args.cap)
        missing = target - report.visited
        extra = report.visited - target
        print(f"exhaustive progressive classes within cap: {len(target)}; "
              f"covered {len(target) - len(missing)}; missing {len(missing)}; "
              f"extra {len(extra)}")
        return EXIT_OK if not missing and not extra and not report.emitted_outside_prog else EXIT_RUNTIME
    return EXIT_OK


def _check_line(name: str, ok: bool) -> bool:
    print(f"  [{'PASS' if ok else 'FAIL'}] {name}")
    return ok


def _cmd_check(args) -> int:
    if getattr(args, "dry_run", False):
        print("ok: check suite")
        return EXIT_OK
    backend = args.backend
    all_ok = True
    print("invariant suite:")

    p1 = ModelParams(d=1, m=1, beta=1.0)
    pair = Configuration([(0,), (1,)])
    law = enumerate_step_distribution(pair, p1)
    all_ok &= _check_line("pair law: stay = 2/3 exactly",
                          law.exact and law.prob_state(pair) == Fraction(2, 3))
    shifts = [law.prob_state(Configuration([(1,), (2,)])),
              law.prob_state(Configuration([(-1,), (0,)]))]
    all_ok &= _check_line("pair law: each shift = 1/6 exactly",
                          all(q == Fraction(1, 6) for q in shifts))
    all_ok &= _check_line("pair law: total = 1 exactly", law.total() == 1)
    all_ok &= _check_line("pair law: one translation class, mass 1 exactly",
                          law.prob_class(TranslationClass.of(pair)) == 1)

    p2 = ModelParams(d=3, m=2, beta=4.0)
    rec = cat_run(segment(5, 3), p2, 20000, RngStream(11, 0), backend=backend)
    all_ok &= _check_line("mass conservation over 2e4 steps (3,2,4)",
                          rec.mass_violations == 0)
    all_ok &= _check_line("a.m.l.g. over 2e4 steps (3,2,4)",
                          rec.amlg_violations == 0)

    C = Configuration([(0, 1, 0), (1, 1, 0), (0, 0, 2)])
    law_a = enumerate_step_distribution(C, p2)
    law_b = enumerate_step_distribution(C.translate([3, -1, 2]), p2)
    same = (law_a.by_class.keys() == law_b.by_class.keys()
            and all(law_a.by_class[k] == law_b.by_class[k] for k in law_a.by_class))
    all_ok &= _check_line("translation invariance of the class law (exact)", same)

    rng = RngStream(7, 0)
    counts: dict = {}
    N = 40000
    C0 = Configuration([(0,), (1,)])
    for _ in range(N):
        C1, _tr = cat_step(C0, p1, rng, backend=backend)
        counts[C1] = counts.get(C1, 0) + 1
    tv = 0.5 * sum(abs(counts.get(D, 0) / N - float(q))
                   for D, q in law.by_state.items())
    all_ok &= _check_line(f"sampler vs oracle TV over {N} draws < 0.01 (got {tv:.4f})",
                          tv < 0.01)
    print("all checks passed" if all_ok else "CHECK FAILURES")
    return EXIT_OK if all_ok else EXIT_RUNTIME


def _cmd_export(args) -> int:
    if args.dry_run:
        print(f"ok: export {len(args.inputs)} files")
        return EXIT_OK
    out = _outdir(args)
    records = []
    for path in args.inputs:
        with open(path, "r", encoding="utf-8") as fh:
            records.append(formats.read_trajectory(fh))
    path = os.path.join(out, "trajectories.csv")
    with open(path, "w", encoding="utf-8") as fh:
        formats.write_trajectory_csv(records, fh)
    print(f"wrote {path} ({len(records)} trajectories)")
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "enumerate": _cmd_enumerate,
    "sweep": _cmd_sweep,
    "stationarity": _cmd_stationarity,
    "reach": _cmd_reach,
    "check": _cmd_check,
    "export": _cmd_export,
}


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (ValidationError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except EnumerationInfeasible as exc:
        print(f"runtime error (enumeration): {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"runtime error (io): {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except RuntimeError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
