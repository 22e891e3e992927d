"""The compiled and numpy kernels must be interchangeable."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from symkio import _backend
from symkio.baseline import ooc_chol, ooc_syrk, ooc_trsm
from symkio.io_model import IoLedger
from symkio.lbc import lbc
from symkio.matrix import Matrix, PackedTriangular, random_matrix, random_spd, reference_cholesky
from symkio.tbs import tbs, tbs_tiled

pytestmark = pytest.mark.skipif(
    "cython" not in _backend.available(), reason="compiled core not built"
)


def _state(ledger):
    return (
        ledger.snapshot(),
        ledger.matrix_loads.tolist(),
        [m.tobytes() for m in ledger.resident_maps],
    )


def _both(fn, compute=True):
    """Run ``fn(ledger)`` under each backend; return (states, results)."""
    states, results = [], []
    for name in ("python", "cython"):
        with _backend.use_backend(name):
            ledger = IoLedger(fn.S, compute=compute)
            out = fn(ledger)
            states.append(_state(ledger))
            results.append(None if out is None else np.array(out.data))
    return states, results


def _syrk_case(algo, n, m, S, b=None):
    def fn(ledger):
        A = random_matrix(n, m, 7)
        C = random_spd(n, 8)
        if algo == "ooc":
            return ooc_syrk(A, C, ledger)[0]
        if algo == "tbs":
            return tbs(A, C, ledger)[0]
        return tbs_tiled(A, C, ledger, b)[0]

    fn.S = S
    return fn


def _chol_case(algo, n, S, b=None):
    def fn(ledger):
        A = random_spd(n, 3)
        if algo == "ooc":
            return ooc_chol(A, ledger)[0]
        return lbc(A, ledger, b)[0]

    fn.S = S
    return fn


def _trsm_case(nb, rows, S):
    def fn(ledger):
        L = reference_cholesky(random_spd(nb, 1))
        B = random_matrix(rows, nb, 2)
        return ooc_trsm(L, B, ledger)[0]

    fn.S = S
    return fn


def test_backend_names():
    with _backend.use_backend("python"):
        assert _backend.name() == "python"
    with _backend.use_backend("cython"):
        assert _backend.name() == "cython"
    with pytest.raises(ValueError):
        _backend.set_backend("fortran")


@given(
    algo=st.sampled_from(["ooc", "tbs", "tiled"]),
    n=st.integers(1, 60),
    m=st.integers(1, 9),
    S=st.integers(6, 130),
    b=st.integers(1, 3),
)
def test_syrk_identical(algo, n, m, S, b):
    if algo == "tiled" and b * b > S:
        b = 1
    states, results = _both(_syrk_case(algo, n, m, S, b))
    assert states[0] == states[1]
    np.testing.assert_allclose(results[0], results[1], rtol=1e-12, atol=1e-12)


@given(algo=st.sampled_from(["ooc", "lbc"]), n=st.integers(1, 50), S=st.integers(3, 130),
       b=st.none() | st.integers(1, 12))
def test_chol_identical(algo, n, S, b):
    states, results = _both(_chol_case(algo, n, S, b))
    assert states[0] == states[1]
    np.testing.assert_allclose(results[0], results[1], rtol=1e-10, atol=1e-12)


@given(nb=st.integers(1, 20), rows=st.integers(1, 25), S=st.integers(3, 300))
def test_trsm_identical(nb, rows, S):
    states, results = _both(_trsm_case(nb, rows, S))
    assert states[0] == states[1]
    np.testing.assert_allclose(results[0], results[1], rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("case", [
    _syrk_case("tbs", 400, 3, 55),
    _syrk_case("tiled", 300, 2, 120, 3),
    _chol_case("lbc", 150, 28),
])
def test_count_mode_identical(case):
    states, _ = _both(case, compute=False)
    assert states[0] == states[1]


def test_count_matches_compute():
    case = _chol_case("lbc", 90, 45)
    counted, _ = _both(case, compute=False)
    computed, _ = _both(case, compute=True)
    assert counted[1] == computed[1]


def test_count_mode_leaves_data_alone():
    A = Matrix.zeros(10, 3)
    A.data[:] = np.nan
    C = PackedTriangular.zeros(10)
    for name in _backend.available():
        with _backend.use_backend(name):
            tbs(A, C, IoLedger(15, compute=False))
            assert not C.data.any()


def test_benchmark_runs(capsys):
    import runpy
    from pathlib import Path

    path = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_backends.py"
    bench = runpy.run_path(str(path))
    assert bench["main"](["--quick", "--repeat", "1"]) == 0
    assert "speed-up" in capsys.readouterr().out
