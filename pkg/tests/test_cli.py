from __future__ import annotations

import json
import time
from pathlib import Path

import pytest

from catsim.cli import main

SEED = 20260822


@pytest.fixture(autouse=True)
def clean_env(monkeypatch: pytest.MonkeyPatch):
    monkeypatch.delenv("CATSIM_SEED", raising=False)
    monkeypatch.delenv("CATSIM_OUTDIR", raising=False)
    yield


def test_version_exits_zero(capsys: pytest.CaptureFixture) -> None:
    assert main(["--version"]) == 0
    assert "catsim" in capsys.readouterr().out


def test_missing_flags_is_validation_error(capsys: pytest.CaptureFixture) -> None:
    assert main(["simulate", "--d", "2"]) == 2
    err = capsys.readouterr().err
    assert "missing required flags" in err
    assert "--beta" in err and "--steps" in err


def test_initial_file_requires_path() -> None:
    assert main(["simulate", "--d", "2", "--m", "1", "--beta", "4", "--n", "3",
                 "--steps", "5", "--initial", "file"]) == 2


def test_invalid_model_flags_exit_two() -> None:
    assert main(["simulate", "--d", "0", "--m", "1", "--beta", "4", "--n", "3",
                 "--steps", "5"]) == 2


def test_unknown_choice_exits_two() -> None:
    assert main(["simulate", "--d", "2", "--m", "1", "--beta", "4", "--n", "3",
                 "--steps", "5", "--backend", "cython"]) == 2


DRY_RUNS = [
    ["simulate", "--d", "2", "--m", "1", "--beta", "4", "--n", "4",
     "--steps", "100", "--dry-run"],
    ["enumerate", "--d", "1", "--m", "1", "--beta", "1", "--n", "2", "--dry-run"],
    ["sweep", "--d", "2", "--m", "1", "--beta", "4", "--n", "4",
     "--steps", "100", "--dry-run"],
    ["stationarity", "--d", "2", "--m", "1", "--beta", "4", "--n", "4",
     "--steps", "100", "--dry-run"],
    ["reach", "--d", "1", "--m", "1", "--beta", "1", "--n", "3", "--cap", "6",
     "--dry-run"],
    ["check", "--dry-run"],
    ["export", "whatever.jsonl", "--dry-run"],
]


@pytest.mark.parametrize("argv", DRY_RUNS, ids=[a[0] for a in DRY_RUNS])
def test_dry_runs_fast_and_ok(argv: list, capsys: pytest.CaptureFixture) -> None:
    start = time.monotonic()
    code = main(argv)
    elapsed = time.monotonic() - start
    assert code == 0
    assert capsys.readouterr().out.startswith("ok:")
    assert elapsed < 1.0


def simulate_into(outdir: Path, seed: int = SEED) -> int:
    return main(["simulate", "--d", "2", "--m", "1", "--beta", "4", "--n", "4",
                 "--steps", "50", "--seeds", "2", "--seed", str(seed),
                 "--snapshot-stride", "25", "--out", str(outdir)])


def test_simulate_writes_trajectories(tmp_path: Path,
                                      capsys: pytest.CaptureFixture) -> None:
    assert simulate_into(tmp_path) == 0
    out = capsys.readouterr().out
    assert "wrote 2 trajectories" in out
    for name in ("trajectory_0000.jsonl", "trajectory_0001.jsonl",
                 "trajectories.csv"):
        assert (tmp_path / name).is_file()
    header = json.loads((tmp_path / "trajectory_0001.jsonl")
                        .read_text(encoding="utf-8").splitlines()[0])
    assert header["master_seed"] == SEED
    assert header["stream_id"] == 1
    assert header["T"] == 50


def test_simulate_byte_reproducible(tmp_path: Path) -> None:
    a, b = tmp_path / "a", tmp_path / "b"
    assert simulate_into(a) == 0
    assert simulate_into(b) == 0
    for name in ("trajectory_0000.jsonl", "trajectory_0001.jsonl",
                 "trajectories.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_seed_env_matches_flag(tmp_path: Path,
                               monkeypatch: pytest.MonkeyPatch) -> None:
    flagged = tmp_path / "flag"
    assert simulate_into(flagged, seed=99) == 0
    env_dir = tmp_path / "env"
    monkeypatch.setenv("CATSIM_SEED", "99")
    assert main(["simulate", "--d", "2", "--m", "1", "--beta", "4", "--n", "4",
                 "--steps", "50", "--seeds", "2", "--snapshot-stride", "25",
                 "--out", str(env_dir)]) == 0
    assert ((flagged / "trajectory_0000.jsonl").read_bytes()
            == (env_dir / "trajectory_0000.jsonl").read_bytes())


def test_outdir_env_wins(tmp_path: Path,
                         monkeypatch: pytest.MonkeyPatch) -> None:
    env_dir = tmp_path / "from_env"
    monkeypatch.setenv("CATSIM_OUTDIR", str(env_dir))
    assert simulate_into(tmp_path / "ignored") == 0
    assert (env_dir / "trajectory_0000.jsonl").is_file()
    assert not (tmp_path / "ignored" / "trajectory_0000.jsonl").exists()


def test_enumerate_prints_exact_pair_law(capsys: pytest.CaptureFixture) -> None:
    assert main(["enumerate", "--d", "1", "--m", "1", "--beta", "1",
                 "--n", "2"]) == 0
    out = capsys.readouterr().out
    assert "# format=catsim.law version=1 arithmetic=exact" in out
    assert "2/3" in out and "1/6" in out
    assert "# total 1" in out


def test_enumerate_by_class(capsys: pytest.CaptureFixture) -> None:
    assert main(["enumerate", "--d", "1", "--m", "1", "--beta", "1",
                 "--n", "2", "--by-class"]) == 0
    out = capsys.readouterr().out
    assert "class" in out and "1 = 1.000000" in out


def test_enumerate_infeasible_exits_one(capsys: pytest.CaptureFixture) -> None:
    assert main(["enumerate", "--d", "3", "--m", "2", "--beta", "4",
                 "--n", "9", "--cap", "10000"]) == 1
    assert "enumeration" in capsys.readouterr().err


def test_sweep_writes_csv_and_reports_boundary(tmp_path: Path,
                                               capsys: pytest.CaptureFixture) -> None:
    assert main(["sweep", "--d", "2", "--m", "1", "--beta", "4", "--n", "2",
                 "--steps", "60", "--seeds", "2", "--seed", "5",
                 "--n-range", "2,3", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert (tmp_path / "sweep.csv").is_file()
    assert "boundary" in out and "n_c = 4" in out
    tag = (tmp_path / "sweep.csv").read_text(encoding="utf-8").splitlines()[0]
    assert tag.startswith("# format=catsim.sweep")


def test_stationarity_reports_tv(capsys: pytest.CaptureFixture) -> None:
    assert main(["stationarity", "--d", "2", "--m", "1", "--beta", "4",
                 "--n", "4", "--steps", "60", "--seeds", "2", "--seed", "3",
                 "--diameter", "12"]) == 0
    assert "TV(diameter)" in capsys.readouterr().out


def test_reach_compare_covers_everything(capsys: pytest.CaptureFixture) -> None:
    assert main(["reach", "--d", "1", "--m", "1", "--beta", "1", "--n", "3",
                 "--cap", "6", "--compare"]) == 0
    out = capsys.readouterr().out
    assert "missing 0" in out and "extra 0" in out


def test_check_suite_all_pass(capsys: pytest.CaptureFixture) -> None:
    assert main(["check"]) == 0
    out = capsys.readouterr().out
    assert "all checks passed" in out
    assert "[FAIL]" not in out


def test_export_roundtrips_simulate_csv(tmp_path: Path,
                                        capsys: pytest.CaptureFixture) -> None:
    sim = tmp_path / "sim"
    assert simulate_into(sim) == 0
    exp = tmp_path / "exp"
    assert main(["export", str(sim / "trajectory_0000.jsonl"),
                 str(sim / "trajectory_0001.jsonl"), "--out", str(exp)]) == 0
    assert "wrote" in capsys.readouterr().out
    assert ((exp / "trajectories.csv").read_bytes()
            == (sim / "trajectories.csv").read_bytes())


def test_export_missing_input_exits_one(tmp_path: Path,
                                        capsys: pytest.CaptureFixture) -> None:
    assert main(["export", str(tmp_path / "nope.jsonl"),
                 "--out", str(tmp_path)]) == 1
    assert "runtime error (io)" in capsys.readouterr().err
