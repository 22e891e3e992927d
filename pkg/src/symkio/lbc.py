"""Large-block right-looking Cholesky.

Each iteration takes the next ``b`` columns ``I0`` and the rows ``I1`` below them:

1. factor the diagonal block ``A[I0, I0]`` with the one-tile kernel,
2. solve ``A[I1, I0] <- A[I1, I0] @ inv(L[I0, I0]).T``,
3. subtract ``A[I1, I0] @ A[I1, I0].T`` from the trailing triangle with TBS.

Every step works in place on views of the packed input; nothing is copied, so
the ledger sees the real traffic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .baseline import chol_view, tile_side, trsm_view
from .io_model import IoLedger, IoReport
from .matrix import PackedTriangular
from .tbs import tbs_view

__all__ = ["LbcIteration", "LbcPlan", "choose_block_size", "lbc"]


def choose_block_size(N: int) -> int:
    if N < 1:
        raise ValueError("N must be >= 1")
    return max(1, math.isqrt(N))


@dataclass(frozen=True)
class LbcIteration:
    start: int
    size: int

    def ranges(self, N: int) -> tuple[range, range]:
        return range(self.start, self.start + self.size), range(self.start + self.size, N)


@dataclass(frozen=True)
class LbcPlan:
    N: int
    b: int
    iterations: tuple[LbcIteration, ...] = field(init=False)

    def __post_init__(self):
        if self.N < 1 or self.b < 1:
            raise ValueError("N and b must be positive")
        its = tuple(
            LbcIteration(i0, min(self.b, self.N - i0)) for i0 in range(0, self.N, self.b)
        )
        object.__setattr__(self, "iterations", its)


def lbc(A: PackedTriangular, ledger: IoLedger, b: int | None = None, trace: list | None = None
        ) -> tuple[PackedTriangular, IoReport]:
    """Overwrite ``A`` with its Cholesky factor using block size ``b`` (default ``isqrt(N)``).

    When ``trace`` is a list, one dict per iteration is appended with the
    ledger deltas of its three steps under keys ``chol``, ``trsm`` and ``tbs``.
    """
    N = A.n
    plan = LbcPlan(N, choose_block_size(N) if b is None else b)
    tile_side(ledger.capacity)
    view = ledger.view(A)
    data = A.data
    for it in plan.iterations:
        i0, bs = it.start, it.size
        rest = N - i0 - bs
        before = ledger.snapshot()
        diag = view.shifted(i0, i0)
        chol_view(ledger, diag, bs, data)
        after_chol = ledger.snapshot()
        panel = view.shifted(i0 + bs, i0)
        if rest:
            trsm_view(ledger, diag, panel, rest, bs, data, data)
        after_trsm = ledger.snapshot()
        if rest:
            tbs_view(ledger, panel, view.shifted(i0 + bs, i0 + bs), rest, bs, -1.0, data, data)
        if trace is not None:
            end = ledger.snapshot()
            trace.append({
                "start": i0,
                "size": bs,
                "chol": after_chol - before,
                "trsm": after_trsm - after_chol,
                "tbs": end - after_trsm,
            })
    return A, ledger.snapshot()
