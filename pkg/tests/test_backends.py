from __future__ import annotations

import numpy as np
import pytest

from catsim.lattice import Configuration, segment
from catsim.kernel import (ModelParams, RngStream, cat_run, one_step_arrays,
                           resolve_backend, weight_mode)

SEED = 20260822

CASES = [
    (segment(2, 1), ModelParams(d=1, m=1, beta=1.0), 500),
    (segment(4, 2), ModelParams(d=2, m=1, beta=4.0), 500),
    (segment(5, 3), ModelParams(d=3, m=2, beta=4.0), 300),
    (Configuration([(0, 0), (1, 0), (0, 1), (1, 1)]),
     ModelParams(d=2, m=2, beta=2.0), 300),
]


def test_resolve_backend() -> None:
    assert resolve_backend("numpy") == "numpy"
    assert resolve_backend("numba") == "numba"
    with pytest.raises(ValueError, match="unknown backend"):
        resolve_backend("cython")


def test_resolve_backend_env(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("CATSIM_BACKEND", "numpy")
    assert resolve_backend() == "numpy"
    assert resolve_backend("numba") == "numba"
    monkeypatch.setenv("CATSIM_BACKEND", "fortran")
    with pytest.raises(ValueError, match="unknown backend"):
        resolve_backend()


def test_weight_mode_codes() -> None:
    assert weight_mode(1.0) == 1
    assert weight_mode(4.0) == 4
    assert weight_mode(8.0) == 8
    assert weight_mode(2.5) == 0
    assert weight_mode(9.0) == 0


@pytest.mark.parametrize("case", range(len(CASES)))
def test_single_steps_bit_identical(case: int) -> None:
    C0, params, _T = CASES[case]
    pts = C0.pts
    for t in range(100):
        out_nb = one_step_arrays(pts, params, SEED, case, t, backend="numba")
        out_np = one_step_arrays(pts, params, SEED, case, t, backend="numpy")
        for a, b in zip(out_nb, out_np):
            assert np.array_equal(a, b)
        pts = out_nb[0]


@pytest.mark.parametrize("case", range(len(CASES)))
def test_runs_bit_identical(case: int) -> None:
    C0, params, T = CASES[case]
    rec_nb = cat_run(C0, params, T, RngStream(SEED, 10 + case), backend="numba")
    rec_np = cat_run(C0, params, T, RngStream(SEED, 10 + case), backend="numpy")
    assert rec_nb.final == rec_np.final
    assert np.array_equal(rec_nb.diameter_sq, rec_np.diameter_sq)
    assert np.array_equal(rec_nb.n_components, rec_np.n_components)


def test_fast_path_matches_traced_path() -> None:
    # record_traces forces the per-step path even under the numba
    # backend; outcomes must not depend on which path ran
    C0, params, T = CASES[1]
    plain = cat_run(C0, params, T, RngStream(SEED, 77), backend="numba")
    traced = cat_run(C0, params, T, RngStream(SEED, 77), backend="numba",
                     record_traces=True)
    assert plain.final == traced.final
    assert np.array_equal(plain.diameter_sq, traced.diameter_sq)
    assert traced.traces is not None and len(traced.traces) == T


def test_traces_bit_identical_across_backends() -> None:
    C0, params, T = CASES[2]
    rec_nb = cat_run(C0, params, T, RngStream(SEED, 8), backend="numba",
                     record_traces=True)
    rec_np = cat_run(C0, params, T, RngStream(SEED, 8), backend="numpy",
                     record_traces=True)
    assert rec_nb.traces is not None and rec_np.traces is not None
    key_nb = b"".join(tr.key() for tr in rec_nb.traces)
    key_np = b"".join(tr.key() for tr in rec_np.traces)
    assert key_nb == key_np


def test_snapshot_chunking_matches_stepwise() -> None:
    # the numba fast path runs in stride-sized chunks; snapshots must
    # equal the per-step path's states at the same times
    C0, params, T = CASES[1]
    fast = cat_run(C0, params, T, RngStream(SEED, 21), backend="numba",
                   snapshot_stride=50)
    slow = cat_run(C0, params, T, RngStream(SEED, 21), backend="numpy",
                   snapshot_stride=50)
    assert [t for t, _ in fast.snapshots] == [t for t, _ in slow.snapshots]
    for (ta, Ca), (tb, Cb) in zip(fast.snapshots, slow.snapshots):
        assert ta == tb and Ca == Cb
