"""Square-tile out-of-core building blocks: OOC_SYRK, OOC_TRSM, OOC_CHOL.

Each keeps one ``t x t`` result tile in fast memory, with ``t`` the largest
side such that the tile plus two operand slivers fit: ``t*t + 2*t <= S``.
Operand slivers (``t`` elements of one column) are streamed through.

All kernels work in place on matrices living in the ledger's slow memory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import _backend
from .io_model import IoLedger, IoReport, View
from .matrix import Matrix, PackedTriangular, packed_size

__all__ = [
    "TileGrid",
    "chol_tile_side",
    "ooc_chol",
    "ooc_syrk",
    "ooc_trsm",
    "tile_side",
]


def tile_side(S: int) -> int:
    """Largest ``t`` with ``t*t + 2*t <= S``."""
    if S < 3:
        raise ValueError(f"fast memory of {S} elements cannot hold a 1x1 tile and two operands")
    return math.isqrt(S + 1) - 1


def chol_tile_side(n: int, S: int) -> int:
    # whole matrix resident when its triangle fits
    if packed_size(n) <= S:
        return n
    return tile_side(S)


@dataclass(frozen=True)
class TileGrid:
    """Partition of ``rows x cols`` into ``tile x tile`` tiles, last ones ragged."""

    rows: int
    cols: int
    tile: int

    @property
    def shape(self) -> tuple[int, int]:
        return -(-self.rows // self.tile), -(-self.cols // self.tile)

    def row_range(self, ti: int) -> range:
        return range(ti * self.tile, min((ti + 1) * self.tile, self.rows))

    def col_range(self, tj: int) -> range:
        return range(tj * self.tile, min((tj + 1) * self.tile, self.cols))

    def tile_of(self, i: int, j: int) -> tuple[int, int]:
        return i // self.tile, j // self.tile


# -- view-level entry points, shared with tbs / lbc ---------------------


def syrk_rows(ledger: IoLedger, a: View, c: View, row_lo: int, row_hi: int, m: int,
              sign: float, a_data, c_data) -> None:
    """Rows ``[row_lo, row_hi)`` of ``C += sign * A @ A.T`` (lower part) by square tiles."""
    if row_hi <= row_lo:
        return
    _backend.kernels().square_syrk(
        ledger, a, c, row_lo, row_hi, m, tile_side(ledger.capacity), sign, a_data, c_data
    )


def trsm_view(ledger: IoLedger, l: View, x: View, nrows: int, nb: int, l_data, x_data) -> None:
    k = _backend.kernels()
    if packed_size(nb) + nb <= ledger.capacity:
        k.trsm_resident(ledger, l, x, nrows, nb, l_data, x_data)
    else:
        k.trsm_tiled(ledger, l, x, nrows, nb, tile_side(ledger.capacity), l_data, x_data)


def chol_view(ledger: IoLedger, a: View, n: int, a_data) -> None:
    _backend.kernels().chol_tiled(ledger, a, n, chol_tile_side(n, ledger.capacity), a_data)


# -- public operations --------------------------------------------------


def ooc_syrk(A: Matrix, C: PackedTriangular, ledger: IoLedger) -> tuple[PackedTriangular, IoReport]:
    """``C += lower(A @ A.T)`` in place with square result tiles."""
    if A.rows != C.n:
        raise ValueError(f"A has {A.rows} rows but C has side {C.n}")
    tile_side(ledger.capacity)
    syrk_rows(ledger, ledger.view(A), ledger.view(C), 0, C.n, A.cols, 1.0, A.data, C.data)
    return C, ledger.snapshot()


def ooc_trsm(L: PackedTriangular, B: Matrix, ledger: IoLedger) -> tuple[Matrix, IoReport]:
    """Overwrite ``B`` (``M x b``) with ``B @ inv(L).T``.

    Each row ``r`` of the result satisfies ``r @ L.T == old row``.
    """
    if B.cols != L.n:
        raise ValueError(f"B has {B.cols} columns but L has side {L.n}")
    tile_side(ledger.capacity)
    trsm_view(ledger, ledger.view(L), ledger.view(B), B.rows, L.n, L.data, B.data)
    return B, ledger.snapshot()


def ooc_chol(A: PackedTriangular, ledger: IoLedger) -> tuple[PackedTriangular, IoReport]:
    """Replace ``A`` by its Cholesky factor, one tile at a time (left-looking).

    Raises :class:`NotPositiveDefiniteError` naming the failing column.
    """
    tile_side(ledger.capacity)
    chol_view(ledger, ledger.view(A), A.n, A.data)
    return A, ledger.snapshot()
