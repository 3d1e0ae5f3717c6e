from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest

from catsim.lattice import (Configuration, TranslationClass, components,
                            diameter_sq, format_configuration, segment)
from catsim.kernel import ModelParams, RngStream, cat_run
from catsim.kernel.oracle import EnumerationInfeasible
from catsim.harness import (CellStats, ExperimentSpec, InitialCondition,
                            SweepResult, classify_cell, copycat_run,
                            enumerate_prog_classes, load_experiment_config,
                            reachability_bfs, run_ensemble,
                            spread_configuration, stationarity_check, sweep,
                            total_variation)

SEED = 20260822

P111 = ModelParams(d=1, m=1, beta=1.0)


# ---------------------------------------------------------------------------
# initial conditions

def test_spread_examples() -> None:
    C = spread_configuration(5, 2, 20)
    assert C.n == 5
    assert diameter_sq(C) == 400
    parts = components(C)
    assert sorted(p.n for p in parts) == [2, 3]
    one_d = spread_configuration(4, 1, 11)
    assert one_d.pts[:, 0].tolist() == [0, 1, 10, 11]


def test_spread_errors() -> None:
    with pytest.raises(ValueError, match="at least two points"):
        spread_configuration(1, 2, 5)
    with pytest.raises(ValueError, match="diameter must be at least n"):
        spread_configuration(6, 2, 5)


def test_initial_condition_validation() -> None:
    with pytest.raises(ValueError, match="unknown initial condition"):
        InitialCondition(kind="ring")
    with pytest.raises(ValueError, match="positive diameter"):
        InitialCondition(kind="spread")
    with pytest.raises(ValueError, match="requires a path"):
        InitialCondition(kind="file")
    seg = InitialCondition(kind="segment").build(4, 2)
    assert seg == segment(4, 2)


def test_initial_condition_from_file(tmp_path: Path) -> None:
    C = Configuration([(0, 0), (2, 1), (5, 5)])
    path = tmp_path / "init.txt"
    path.write_text(format_configuration(C), encoding="utf-8")
    ic = InitialCondition(kind="file", path=str(path))
    assert ic.build(3, 2) == C
    with pytest.raises(ValueError, match="holds 3 points"):
        ic.build(4, 2)
    with pytest.raises(ValueError, match="dimension"):
        ic.build(3, 3)


def test_experiment_spec_validation() -> None:
    good = ExperimentSpec(params=P111, n=2, initial=InitialCondition("segment"),
                          T=10)
    assert good.initial_configuration() == segment(2, 1)
    with pytest.raises(ValueError, match="at least m\\+1"):
        ExperimentSpec(params=ModelParams(d=1, m=2, beta=1.0), n=2,
                       initial=InitialCondition("segment"), T=10)
    with pytest.raises(ValueError, match="nonnegative"):
        ExperimentSpec(params=P111, n=2, initial=InitialCondition("segment"),
                       T=-1)
    with pytest.raises(ValueError, match="at least 1"):
        ExperimentSpec(params=P111, n=2, initial=InitialCondition("segment"),
                       T=10, K=0)


# ---------------------------------------------------------------------------
# ensembles

def small_spec(K: int = 4, T: int = 200) -> ExperimentSpec:
    return ExperimentSpec(params=ModelParams(d=2, m=1, beta=4.0), n=4,
                          initial=InitialCondition("segment"), T=T, K=K,
                          master_seed=SEED)


def test_ensemble_streams_match_direct_runs() -> None:
    spec = small_spec()
    recs = run_ensemble(spec, jobs=1)
    assert [r.stream_id for r in recs] == [0, 1, 2, 3]
    direct = cat_run(segment(4, 2), spec.params, spec.T, RngStream(SEED, 2))
    assert recs[2].final == direct.final
    assert np.array_equal(recs[2].diameter_sq, direct.diameter_sq)


def test_ensemble_independent_of_worker_count() -> None:
    spec = small_spec()
    serial = run_ensemble(spec, jobs=1)
    parallel = run_ensemble(spec, jobs=2)
    for a, b in zip(serial, parallel):
        assert a.final == b.final
        assert np.array_equal(a.diameter_sq, b.diameter_sq)


def test_copycat_run_length_and_types() -> None:
    from catsim.copycat import TupleState
    st = TupleState((segment(2, 1), segment(2, 1).translate((30,))))
    states = copycat_run(st, P111, 50, RngStream(SEED, 0))
    assert len(states) == 51
    assert states[0] is st
    assert all(s.k == 2 for s in states)


# ---------------------------------------------------------------------------
# classification

def test_classify_cell_from_hand_rows() -> None:
    T = 4
    rows = [np.array([100, 100, 64, 4, 4]),
            np.array([100, 100, 100, 100, 121])]
    cell = classify_cell(m=1, n=2, T=T, initial_diameter=10.0,
                         diameter_sq_rows=rows)
    assert cell.defined
    assert cell.collapse_threshold == 8
    assert cell.min_diameter.tolist() == [2.0, 10.0]
    assert cell.final_diameter.tolist() == [2.0, 11.0]
    assert cell.lasthalf_min.tolist() == [2.0, 10.0]
    # row 1 sits at diameter <= 8 three times after step 0 (the 64
    # entry hits the threshold exactly), row 2 never
    assert cell.visits_below.tolist() == [3, 0]
    # medians: min 6.0 <= 8 so collapse; final 6.5 <= 10 so not growth
    assert cell.collapse_dominant
    assert not cell.growth_dominant


def test_classify_cell_undefined_below_minimum() -> None:
    cell = classify_cell(m=2, n=2, T=5, initial_diameter=1.0,
                         diameter_sq_rows=[])
    assert not cell.defined
    assert not cell.collapse_dominant and not cell.growth_dominant


def test_classify_cell_idempotent() -> None:
    spec = small_spec(K=6, T=100)
    rows = [r.diameter_sq for r in run_ensemble(spec)]
    d0 = math.sqrt(diameter_sq(spec.initial_configuration()))
    a = classify_cell(1, 4, spec.T, d0, rows)
    b = classify_cell(1, 4, spec.T, d0, rows)
    assert (a.collapse_dominant, a.growth_dominant) == (b.collapse_dominant,
                                                       b.growth_dominant)
    assert np.array_equal(a.min_diameter, b.min_diameter)
    assert np.array_equal(a.visits_below, b.visits_below)


def test_boundary_growth_precedence() -> None:
    def cell(m: int, n: int, collapse: bool, growth: bool) -> CellStats:
        c = CellStats(m=m, n=n, defined=n > m)
        c.collapse_dominant = collapse
        c.growth_dominant = growth
        return c

    base = small_spec()
    cells = {(1, 2): cell(1, 2, True, False),
             (1, 3): cell(1, 3, True, True),
             (1, 4): cell(1, 4, False, True)}
    res = SweepResult(base=base, m_values=(1,), n_values_by_m={1: (2, 3, 4)},
                      cells=cells)
    assert res.boundary(1) == 3

    none_grow = {k: cell(k[0], k[1], True, False) for k in cells}
    res2 = SweepResult(base=base, m_values=(1,), n_values_by_m={1: (2, 3, 4)},
                       cells=none_grow)
    assert res2.boundary(1) is None


def test_sweep_small_grid_deterministic() -> None:
    base = ExperimentSpec(params=ModelParams(d=2, m=1, beta=4.0), n=2,
                          initial=InitialCondition("segment"), T=120, K=3,
                          master_seed=SEED)
    res_a = sweep(base, m_values=[1], n_values=[2, 3])
    res_b = sweep(base, m_values=[1], n_values=[2, 3])
    assert set(res_a.cells) == {(1, 2), (1, 3)}
    for key in res_a.cells:
        ca, cb = res_a.cells[key], res_b.cells[key]
        assert np.array_equal(ca.final_diameter, cb.final_diameter)
        assert (ca.collapse_dominant, ca.growth_dominant) == (
            cb.collapse_dominant, cb.growth_dominant)
    # a unit pair can never exceed the 2n^2 threshold
    assert res_a.cells[(1, 2)].collapse_dominant


# ---------------------------------------------------------------------------
# exhaustive class enumeration and BFS reachability

def test_enumerate_prog_classes_counts() -> None:
    assert len(enumerate_prog_classes(P111, 2, 3)) == 1
    classes = enumerate_prog_classes(P111, 3, 4)
    assert len(classes) == 5
    spread_out = TranslationClass.of(Configuration([(0,), (2,), (4,)]))
    assert spread_out not in classes
    assert TranslationClass.of(segment(3, 1)) in classes


def test_enumerate_prog_classes_guard() -> None:
    with pytest.raises(EnumerationInfeasible, match="exceed the guard"):
        enumerate_prog_classes(ModelParams(d=3, m=1, beta=4.0), 6, 40, guard=10)


def test_reachability_bfs_witnesses_are_sound() -> None:
    report = reachability_bfs(P111, 3, 6)
    assert report.start == TranslationClass.of(segment(3, 1))
    assert not report.partial
    assert report.emitted_outside_prog == []
    assert len(report.visited) > 1
    allowed = enumerate_prog_classes(P111, 3, 6)
    assert report.visited <= allowed
    for out_cls, (pred, act, trans, prob) in report.witnesses.items():
        assert prob > 0
        assert pred in report.visited
        rep = pred.canonical
        survivors = [p for p in rep if p not in set(act)]
        rebuilt = Configuration(survivors + list(trans))
        assert TranslationClass.of(rebuilt) == out_cls


def test_reachability_bfs_partial_flag() -> None:
    report = reachability_bfs(P111, 3, 8, class_cap=3)
    assert report.partial
    assert len(report.visited) == 3


def test_reachability_bfs_start_cap_error() -> None:
    with pytest.raises(ValueError, match="exceeds the diameter cap"):
        reachability_bfs(P111, 9, 4)


# ---------------------------------------------------------------------------
# stationarity comparison

def test_stationarity_check_identical_specs() -> None:
    spec = small_spec(K=3, T=60)
    report = stationarity_check(spec, spec)
    assert report.tv_diameter == 0.0
    assert report.histogram_a == report.histogram_b
    assert report.tv_class is None


def test_stationarity_check_guards() -> None:
    a = small_spec()
    b = ExperimentSpec(params=ModelParams(d=2, m=1, beta=4.0), n=5,
                       initial=InitialCondition("segment"), T=a.T, K=a.K,
                       master_seed=SEED)
    with pytest.raises(ValueError, match="share model parameters"):
        stationarity_check(a, b)
    c = ExperimentSpec(params=a.params, n=a.n,
                       initial=InitialCondition("segment"), T=a.T + 1, K=a.K)
    with pytest.raises(ValueError, match="share T"):
        stationarity_check(a, c)


def test_total_variation_examples() -> None:
    assert total_variation({"x": 1.0}, {"x": 1.0}) == 0.0
    assert total_variation({"x": 1.0}, {"y": 1.0}) == 1.0
    assert total_variation({"x": 0.5, "y": 0.5}, {"x": 1.0}) == pytest.approx(0.5)


# ---------------------------------------------------------------------------
# config files

CONFIG_TEXT = """\
[params]
d = 2
m = 1
beta = 4.0

[initial]
n = 6
kind = spread
diameter = 30

[ensemble]
steps = 500
size = 8
master_seed = 123
snapshot_stride = 100
record_traces = yes
"""


def test_load_experiment_config(tmp_path: Path,
                                monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.delenv("CATSIM_SEED", raising=False)
    path = tmp_path / "exp.ini"
    path.write_text(CONFIG_TEXT, encoding="utf-8")
    spec = load_experiment_config(str(path))
    assert spec.params == ModelParams(d=2, m=1, beta=4.0)
    assert spec.n == 6
    assert spec.initial == InitialCondition(kind="spread", diameter=30)
    assert (spec.T, spec.K, spec.master_seed) == (500, 8, 123)
    assert spec.snapshot_stride == 100
    assert spec.record_traces


def test_config_seed_env_override(tmp_path: Path,
                                  monkeypatch: pytest.MonkeyPatch) -> None:
    path = tmp_path / "exp.ini"
    path.write_text(CONFIG_TEXT, encoding="utf-8")
    monkeypatch.setenv("CATSIM_SEED", "777")
    assert load_experiment_config(str(path)).master_seed == 777


def test_load_experiment_config_errors(tmp_path: Path) -> None:
    with pytest.raises(ValueError, match="cannot read config file"):
        load_experiment_config(str(tmp_path / "missing.ini"))
    bad = tmp_path / "bad.ini"
    bad.write_text(CONFIG_TEXT.replace("kind = spread", "kind = ring"),
                   encoding="utf-8")
    with pytest.raises(ValueError, match="invalid experiment config"):
        load_experiment_config(str(bad))
    nosec = tmp_path / "nosec.ini"
    nosec.write_text("[params]\nd = 2\n", encoding="utf-8")
    with pytest.raises(ValueError, match="invalid experiment config"):
        load_experiment_config(str(nosec))
