"""Triangle-block SYRK.

The first ``c*k`` rows of ``C`` are cut into ``k`` zones of ``c`` rows.  A
triangle block picks one row from each zone and owns every subdiagonal pair of
those ``k`` rows; the ``c**2`` blocks obtained from the cyclic indexing family

    f(0) = j,   f(u) = (i + j*(u - 1)) mod c   (u >= 1)

are pairwise disjoint whenever ``c`` is coprime with every integer in
``[2, k-2]``.  Pairs inside one zone are handled by recursing on the zone, and
the ``l = N - c*k`` leftover rows by a square-tile SYRK.

Holding a block costs ``k(k-1)/2`` elements of ``C`` plus ``k`` elements of one
column of ``A``, so ``k`` is the largest integer with ``k(k+1)/2 <= S``.  With
tiles of side ``b`` every row becomes a ``b``-row tile.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .baseline import syrk_rows, tile_side
from .io_model import IoLedger, IoReport, View
from .matrix import Matrix, PackedTriangular

__all__ = [
    "PLAN_CSV_HEADER",
    "TriangleBlock",
    "TrianglePlan",
    "build_plan",
    "cyclic_index",
    "enumerate_block",
    "largest_coprime_below",
    "primorial_q",
    "sigma",
    "tbs",
    "tbs_tiled",
    "validate_family",
]

PLAN_CSV_HEADER = "N,S,b,k,q,c,l,fallback,depth,gap"


def sigma(m: int) -> int:
    """Smallest ``s`` with ``m <= s(s-1)/2``: the fewest rows whose triangle holds ``m`` pairs."""
    if m < 0:
        raise ValueError("m must be non-negative")
    if m == 0:
        return 0
    # closed form ceil(sqrt(1/4 + 2m) + 1/2), evaluated in integers
    s = (1 + math.isqrt(8 * m)) // 2
    while s * (s - 1) // 2 < m:
        s += 1
    return s


def cyclic_index(i: int, j: int, c: int, u: int) -> int:
    if u == 0:
        return j
    return (i + j * (u - 1)) % c


def _primes_upto(n: int) -> list[int]:
    if n < 2:
        return []
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return [int(p) for p in np.flatnonzero(sieve)]


def primorial_q(k: int) -> int:
    """Product of the primes ``<= k - 2`` (1 when there are none)."""
    if k < 2:
        raise ValueError("k must be >= 2")
    return math.prod(_primes_upto(k - 2))


def largest_coprime_below(x: int, q: int) -> int:
    """Largest ``c <= x`` with ``gcd(c, q) == 1``."""
    if x < 1:
        raise ValueError("x must be >= 1")
    c = x
    while math.gcd(c, q) != 1:
        c -= 1
    return c


def validate_family(c: int, k: int):
    """Exhaustively check the cyclic ``(c, k)`` family.

    Two distinct blocks ``(i, j)`` and ``(i2, j2)`` collide when their indices
    agree at two different arguments ``u < v``: they would then share a pair of
    rows and hence one element of ``C``.

    Returns ``(True, None)`` or ``(False, ((i, j), (i2, j2), (u, v)))``.
    """
    if c < 1 or k < 1:
        raise ValueError("c and k must be positive")
    ii, jj = np.meshgrid(np.arange(c), np.arange(c), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    us = np.arange(k)[:, None]
    f = np.where(us == 0, jj[None, :], (ii[None, :] + jj[None, :] * (us - 1)) % c)
    for u, v in itertools.combinations(range(k), 2):
        key = f[u] * c + f[v]
        order = np.argsort(key, kind="stable")
        sk = key[order]
        dup = np.flatnonzero(sk[1:] == sk[:-1])
        if dup.size:
            a, b = order[dup[0]], order[dup[0] + 1]
            return False, ((int(ii[a]), int(jj[a])), (int(ii[b]), int(jj[b])), (u, v))
    return True, None


@dataclass(frozen=True)
class TriangleBlock:
    rows: tuple[int, ...]

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.rows, self.rows[1:])):
            raise ValueError("rows must be strictly increasing")

    def elements(self) -> set[tuple[int, int]]:
        return {(r, s) for r in self.rows for s in self.rows if r > s}

    def __len__(self) -> int:
        n = len(self.rows)
        return n * (n - 1) // 2


@dataclass(frozen=True)
class TrianglePlan:
    """Partition of one TBS level.

    ``c`` counts rows (tiles when ``b > 1``) per zone, and ``l`` is the number
    of leftover rows handled by the square-tile strip.  ``depth`` is the number
    of nested triangle-block levels, 0 when the level falls back entirely.
    ``gap`` is ``N // (k*b) - c``.
    """

    n: int
    S: int
    b: int
    k: int
    q: int
    c: int
    l: int
    fallback: bool
    depth: int
    gap: int

    @property
    def zone_rows(self) -> int:
        return self.c * self.b

    @property
    def block_rows(self) -> int:
        """Rows of ``C`` covered by zones: ``c * k * b``."""
        return self.c * self.k * self.b

    def csv_row(self) -> str:
        return (
            f"{self.n},{self.S},{self.b},{self.k},{self.q},{self.c},{self.l},"
            f"{int(self.fallback)},{self.depth},{self.gap}"
        )


def _max_k(S: int, b: int) -> int:
    # b*b*k(k-1)/2 elements of C plus k*b elements of one A column
    k = 0
    while b * b * (k + 1) * k // 2 + (k + 1) * b <= S:
        k += 1
    return k


def build_plan(N: int, S: int, tile: int = 1) -> TrianglePlan:
    """Plan one TBS level for ``N`` rows with fast memory ``S`` and tile side ``tile``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if tile < 1:
        raise ValueError("tile side must be >= 1")
    if tile * tile > S:
        raise ValueError(f"a {tile}x{tile} tile does not fit in {S} elements")
    k = _max_k(S, tile)
    if k < 2:
        return TrianglePlan(N, S, tile, k, 1, 0, N, True, 0, 0)
    q = primorial_q(k)
    zones = N // (k * tile)
    c = largest_coprime_below(zones, q) if zones >= 1 else 0
    l = N - c * k * tile
    if c < k - 1:
        return TrianglePlan(N, S, tile, k, q, c, l, True, 0, zones - c)
    depth = 1 + build_plan(c * tile, S, tile).depth
    return TrianglePlan(N, S, tile, k, q, c, l, False, depth, zones - c)


def enumerate_block(plan: TrianglePlan, i: int, j: int) -> TriangleBlock:
    """Rows ``u*c + f(u)`` of block ``(i, j)``; tile indices when ``plan.b > 1``."""
    if plan.fallback:
        raise ValueError("plan has no triangle blocks")
    if not (0 <= i < plan.c and 0 <= j < plan.c):
        raise IndexError(f"block ({i}, {j}) outside [0, {plan.c})^2")
    return TriangleBlock(tuple(u * plan.c + cyclic_index(i, j, plan.c, u) for u in range(plan.k)))


def _tbs(ledger: IoLedger, a: View, c: View, n: int, m: int, b: int, sign: float,
         a_data, c_data) -> None:
    plan = build_plan(n, ledger.capacity, b)
    if plan.fallback:
        syrk_rows(ledger, a, c, 0, n, m, sign, a_data, c_data)
        return
    _backend.kernels().tb_sweep(ledger, a, c, plan.c, plan.k, m, b, sign, a_data, c_data)
    zr = plan.zone_rows
    for z in range(plan.k):
        _tbs(ledger, a.shifted(z * zr, 0), c.shifted(z * zr, z * zr), zr, m, b, sign,
             a_data, c_data)
    syrk_rows(ledger, a, c, plan.block_rows, n, m, sign, a_data, c_data)


def tbs_view(ledger: IoLedger, a: View, c: View, n: int, m: int, sign: float,
             a_data, c_data, tile: int = 1) -> None:
    """``C += sign * lower(A @ A.T)`` on views; ``a`` is ``n x m``, ``c`` is ``n x n``."""
    if n < 1 or m < 1:
        return
    tile_side(ledger.capacity)
    _tbs(ledger, a, c, n, m, tile, sign, a_data, c_data)


def tbs(A: Matrix, C: PackedTriangular, ledger: IoLedger, sign: float = 1.0
        ) -> tuple[PackedTriangular, IoReport]:
    """``C += sign * lower(A @ A.T)`` in place by triangle blocks."""
    return tbs_tiled(A, C, ledger, 1, sign)


def tbs_tiled(A: Matrix, C: PackedTriangular, ledger: IoLedger, b: int, sign: float = 1.0
              ) -> tuple[PackedTriangular, IoReport]:
    """Triangle blocks made of ``b x b`` tiles; ``b == 1`` is plain :func:`tbs`."""
    if A.rows != C.n:
        raise ValueError(f"A has {A.rows} rows but C has side {C.n}")
    if b < 1:
        raise ValueError("tile side must be >= 1")
    if b * b > ledger.capacity:
        raise ValueError(f"a {b}x{b} tile does not fit in {ledger.capacity} elements")
    tbs_view(ledger, ledger.view(A), ledger.view(C), C.n, A.cols, sign, A.data, C.data, b)
    return C, ledger.snapshot()
