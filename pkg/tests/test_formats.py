from __future__ import annotations

import io
import json

import numpy as np
import pytest

from catsim.lattice import segment
from catsim.kernel import ModelParams, RngStream, cat_run
from catsim.harness import CellStats, ExperimentSpec, InitialCondition, SweepResult
from catsim.formats import (FORMAT_VERSION, SWEEP_FORMAT, TRAJECTORY_FORMAT,
                            WALK_FORMAT, read_trajectory, read_walk_csv,
                            write_sweep_csv, write_trajectory,
                            write_trajectory_csv, write_walk_csv)

SEED = 20260822


def sample_record():
    return cat_run(segment(4, 2), ModelParams(d=2, m=1, beta=4.0), 30,
                   RngStream(SEED, 7), snapshot_stride=10, record_traces=True)


def test_trajectory_roundtrip_exact() -> None:
    rec = sample_record()
    buf = io.StringIO()
    write_trajectory(rec, buf)
    buf.seek(0)
    back = read_trajectory(buf)
    assert back.params == rec.params
    assert back.initial == rec.initial
    assert back.final == rec.final
    assert back.T == rec.T
    assert back.master_seed == rec.master_seed
    assert back.stream_id == rec.stream_id
    assert back.backend == rec.backend
    assert back.mass_violations == rec.mass_violations
    assert back.amlg_violations == rec.amlg_violations
    assert np.array_equal(back.diameter_sq, rec.diameter_sq)
    assert np.array_equal(back.n_components, rec.n_components)
    assert np.array_equal(back.n_small, rec.n_small)
    assert [t for t, _ in back.snapshots] == [t for t, _ in rec.snapshots]
    for (ta, Ca), (tb, Cb) in zip(back.snapshots, rec.snapshots):
        assert ta == tb and Ca == Cb
    assert back.traces is not None and rec.traces is not None
    assert len(back.traces) == len(rec.traces)
    for a, b in zip(back.traces, rec.traces):
        assert a.t == b.t
        assert np.array_equal(a.activated, b.activated)
        assert np.array_equal(a.transported, b.transported)


def test_trajectory_header_and_events() -> None:
    rec = sample_record()
    buf = io.StringIO()
    write_trajectory(rec, buf, events=[{"t": 3, "added_to_ball": True}])
    lines = buf.getvalue().splitlines()
    header = json.loads(lines[0])
    assert header["format"] == TRAJECTORY_FORMAT
    assert header["version"] == FORMAT_VERSION
    row3 = json.loads(lines[4])
    assert row3["t"] == 3
    assert row3["events"] == {"added_to_ball": True}


def test_read_trajectory_rejects_bad_headers() -> None:
    with pytest.raises(ValueError, match="not a trajectory file"):
        read_trajectory(io.StringIO('{"format": "something-else"}\n'))
    wrong = {"format": TRAJECTORY_FORMAT, "version": 99}
    with pytest.raises(ValueError, match="unsupported trajectory version"):
        read_trajectory(io.StringIO(json.dumps(wrong) + "\n"))


def test_trajectory_csv_shape() -> None:
    recs = [sample_record()]
    buf = io.StringIO()
    write_trajectory_csv(recs, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == f"# format={TRAJECTORY_FORMAT}.csv version={FORMAT_VERSION}"
    assert lines[1].split(",") == ["stream_id", "t", "diameter_sq",
                                   "n_components", "n_small"]
    assert len(lines) == 2 + 31
    first = lines[2].split(",")
    assert first[0] == "7" and first[1] == "0" and first[2] == "9"


def test_sweep_csv_rows_and_labels() -> None:
    defined = CellStats(m=1, n=4, defined=True, collapse_threshold=32,
                        initial_diameter=3.0,
                        min_diameter=np.array([1.0, 2.0]),
                        final_diameter=np.array([5.0, 7.0]),
                        lasthalf_min=np.array([1.0, 2.0]),
                        visits_below=np.array([4, 0]),
                        collapse_dominant=True, growth_dominant=True)
    undefined = CellStats(m=2, n=2, defined=False)
    base = ExperimentSpec(params=ModelParams(d=2, m=1, beta=4.0), n=4,
                          initial=InitialCondition("segment"), T=10)
    result = SweepResult(base=base, m_values=(1, 2),
                         n_values_by_m={1: (4,), 2: (2,)},
                         cells={(1, 4): defined, (2, 2): undefined})
    buf = io.StringIO()
    write_sweep_csv(result, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == f"# format={SWEEP_FORMAT} version={FORMAT_VERSION}"
    assert lines[1].split(",")[0] == "m"
    assert lines[2].split(",") == ["1", "4", "0", "1", "5", "1", "4", "32", "both"]
    assert lines[3].split(",") == ["1", "4", "1", "2", "7", "2", "0", "32", "both"]
    assert lines[4].split(",")[-1] == "undefined"


def test_walk_csv_roundtrip() -> None:
    times = [0, 2, 5, 9]
    walk = np.array([[-10, 0], [-9, 0], [-8, 0], [-8, 1]], dtype=np.int64)
    buf = io.StringIO()
    write_walk_csv(times, walk, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == f"# format={WALK_FORMAT} version={FORMAT_VERSION}"
    assert lines[1].split(",") == ["k", "xi_k", "S_0", "S_1"]
    buf.seek(0)
    back_times, back_walk = read_walk_csv(buf)
    assert back_times == times
    assert np.array_equal(back_walk, walk)


def test_read_walk_csv_rejects_wrong_tag() -> None:
    with pytest.raises(ValueError, match="not a derived-walk file"):
        read_walk_csv(io.StringIO("# format=catsim.sweep version=1\nk,xi_k\n"))
