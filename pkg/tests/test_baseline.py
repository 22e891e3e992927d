import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import solve_triangular

from symkio.baseline import TileGrid, chol_tile_side, ooc_chol, ooc_syrk, ooc_trsm, tile_side
from symkio.io_model import IoLedger
from symkio.matrix import (
    Matrix,
    NotPositiveDefiniteError,
    PackedTriangular,
    random_matrix,
    random_spd,
    reference_cholesky,
    reference_syrk,
)

from conftest import rel_err


def random_lower(b, seed):
    L = np.tril(random_matrix(b, b, seed).to_array())
    L[np.diag_indices(b)] = 1.0 + np.abs(L[np.diag_indices(b)])
    return PackedTriangular.from_dense(L)


@pytest.mark.parametrize("S,t", [(3, 1), (8, 2), (15, 3), (24, 4), (120, 10), (465, 20)])
def test_tile_side(S, t):
    assert tile_side(S) == t
    assert t * t + 2 * t <= S < (t + 1) ** 2 + 2 * (t + 1)


def test_tile_side_too_small():
    with pytest.raises(ValueError):
        tile_side(2)
    with pytest.raises(ValueError):
        ooc_syrk(Matrix.zeros(2, 1), PackedTriangular.zeros(2), IoLedger(2))


def test_tile_grid_partition():
    g = TileGrid(10, 7, 3)
    assert g.shape == (4, 3)
    cells = [(i, j) for ti in range(4) for tj in range(3) for i in g.row_range(ti) for j in g.col_range(tj)]
    assert sorted(cells) == [(i, j) for i in range(10) for j in range(7)]
    assert g.tile_of(9, 6) == (3, 2)


def test_chol_tile_side():
    assert chol_tile_side(4, 10) == 4
    assert chol_tile_side(5, 10) == tile_side(10)


class TestOocSyrk:
    def test_small_example(self, backend):
        C, rep = ooc_syrk(Matrix.from_array([[1.0], [2.0]]), PackedTriangular.zeros(2), IoLedger(3))
        assert C.data.tolist() == [1.0, 2.0, 4.0]
        assert rep.loads_of(1) == 3

    @pytest.mark.parametrize("t,M", [(1, 3), (4, 5), (10, 7)])
    def test_single_diagonal_tile(self, backend, t, M):
        # one diagonal tile streams one sliver of t elements per column
        led = IoLedger(t * t + 2 * t, compute=False)
        _, rep = ooc_syrk(Matrix.zeros(t, M), PackedTriangular.zeros(t), led)
        assert rep.loads_of(0) == t * M
        assert rep.loads_of(1) == t * (t + 1) // 2

    def test_modes_identical(self, backend):
        reps = []
        for compute in (True, False):
            led = IoLedger(110, compute=compute)
            _, rep = ooc_syrk(random_matrix(64, 16, 1), random_spd(64, 2), led)
            reps.append(rep)
        assert reps[0] == reps[1]

    @given(st.integers(1, 128), st.integers(1, 128), st.sampled_from([3, 15, 55, 120]), st.integers(0, 999))
    def test_matches_reference(self, n, m, S, seed):
        A, C = random_matrix(n, m, seed), random_spd(n, seed + 7)
        want = reference_syrk(A, C)
        got, rep = ooc_syrk(A, C, IoLedger(S))
        assert rel_err(got.data, want.data) <= 1e-9
        assert rep.peak_resident <= S
        assert rep.loads_of(1) == n * (n + 1) // 2

    @given(st.integers(3, 600), st.integers(0, 40), st.integers(0, 40))
    def test_envelope(self, S, dn, dm):
        t = tile_side(S)
        N = math.ceil(8 * math.sqrt(S)) + dn
        M = math.ceil(math.sqrt(S)) + dm
        led = IoLedger(S, compute=False)
        _, rep = ooc_syrk(Matrix.zeros(N, M), PackedTriangular.zeros(N), led)
        loads = rep.loads_of(0)
        assert loads <= N * N * M / t + 2 * N * M + t * M
        ratio = loads / (N * N * M / math.sqrt(S))
        assert ratio >= 0.9
        if math.sqrt(S) / t <= 1.19:
            # otherwise the tile rule alone already costs sqrt(S)/t > 1.19
            assert ratio <= 1.3


class TestOocTrsm:
    def test_diagonal(self, backend):
        B, _ = ooc_trsm(PackedTriangular.from_dense(np.diag([2.0, 4.0])), Matrix.from_array([[2.0, 8.0]]), IoLedger(15))
        assert B.data.tolist() == [1.0, 2.0]

    def test_identity(self, backend):
        B0 = random_matrix(5, 4, 3)
        B, _ = ooc_trsm(PackedTriangular.from_dense(np.eye(4)), B0.copy(), IoLedger(8))
        assert np.array_equal(B.data, B0.data)

    @pytest.mark.parametrize("S", [8, 15, 55, 120])
    def test_multiply_back(self, backend, S):
        L, B0 = random_lower(8, 1), random_matrix(16, 8, 2)
        B, rep = ooc_trsm(L, B0.copy(), IoLedger(S))
        back = B.to_array() @ L.lower().T
        assert rel_err(back, B0.to_array()) <= 1e-9
        assert rep.peak_resident <= S

    @given(st.integers(1, 128), st.integers(1, 64), st.sampled_from([3, 15, 55, 120, 2100]), st.integers(0, 999))
    def test_matches_scipy(self, m, b, S, seed):
        L, B0 = random_lower(b, seed), random_matrix(m, b, seed + 1)
        B, _ = ooc_trsm(L, B0.copy(), IoLedger(S))
        want = solve_triangular(L.lower(), B0.to_array().T, lower=True).T
        assert rel_err(B.to_array(), want) <= 1e-9

    def test_zero_diagonal(self, backend):
        L = PackedTriangular.from_dense([[1.0, 0.0], [1.0, 0.0]])
        for S in (6, 3):
            with pytest.raises(ZeroDivisionError):
                ooc_trsm(L, random_matrix(3, 2, 1), IoLedger(S))

    @pytest.mark.parametrize("S", [3, 8, 15, 55, 110, 120, 465])
    def test_envelope(self, S):
        # frozen constant c2 = 8 on the b*M term, valid for M >= t
        t = tile_side(S)
        for b in (1, 5, 16, 33, 64, 100):
            for M in (t, 2 * t + 1, 128, 300):
                led = IoLedger(S, compute=False)
                _, rep = ooc_trsm(PackedTriangular.zeros(b), Matrix.zeros(M, b), led)
                assert rep.loads <= b * b * M / t + 8 * b * M
                if S >= 110:
                    assert rep.loads <= b * b * M / math.sqrt(S) + 8 * b * M


class TestOocChol:
    def test_scalar(self, backend):
        L, rep = ooc_chol(PackedTriangular(1, [9.0]), IoLedger(3))
        assert L.data.tolist() == [3.0] and rep.loads == 1

    @pytest.mark.parametrize("b", [1, 2, 4, 9])
    def test_fits_in_memory(self, backend, b):
        _, rep = ooc_chol(random_spd(b, 1), IoLedger(max(3, b * (b + 1) // 2)))
        assert rep.loads == b * (b + 1) // 2

    def test_random_64(self, backend):
        A = random_spd(64, 5)
        L, rep = ooc_chol(A.copy(), IoLedger(110))
        low = L.lower()
        assert rel_err(low @ low.T, A.symmetric()) <= 1e-9
        assert rep.loads <= 64**3 / (3 * math.sqrt(110)) + 10 * 64**2
        assert rep.peak_resident <= 110

    @given(st.integers(1, 128), st.sampled_from([3, 15, 55, 120]), st.integers(0, 999))
    def test_matches_reference(self, n, S, seed):
        A = random_spd(n, seed)
        L, _ = ooc_chol(A.copy(), IoLedger(S))
        assert rel_err(L.data, reference_cholesky(A).data) <= 1e-9

    @pytest.mark.parametrize("S", [3, 8, 15, 55, 120, 465])
    def test_envelope(self, S):
        t = tile_side(S)
        for b in (1, 2, 5, 16, 33, 64, 100):
            led = IoLedger(S, compute=False)
            _, rep = ooc_chol(PackedTriangular.zeros(b), led)
            assert rep.loads <= b**3 / (3 * t) + b * b

    @pytest.mark.parametrize("S", [6, 15, 465])
    def test_not_spd(self, backend, S):
        a = random_spd(12, 3).symmetric()
        a[7, 7] = -1.0
        with pytest.raises(NotPositiveDefiniteError) as exc:
            ooc_chol(PackedTriangular.from_dense(a), IoLedger(S))
        assert exc.value.column == 7
