"""Two-level memory simulator.

A schedule moves scalar elements between an unbounded slow memory and a fast
memory holding at most ``capacity`` elements.  The ledger never evicts on its
own: overflowing it is a scheduling bug and aborts the run.

Counters live in small numpy arrays so that the compiled kernels can update
them in place; the Python methods below operate on the very same state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .matrix import Matrix, PackedTriangular

__all__ = [
    "CapacityError",
    "ElementAddr",
    "IoLedger",
    "IoReport",
    "LedgerError",
    "ResidencyError",
    "View",
]

# indices into IoLedger.counters
LOADS, STORES, RESIDENT, PEAK = range(4)


class LedgerError(RuntimeError):
    pass


class CapacityError(LedgerError):
    pass


class ResidencyError(LedgerError):
    pass


class ElementAddr(NamedTuple):
    matrix_id: int
    offset: int


@dataclass(frozen=True)
class IoReport:
    loads: int
    stores: int
    peak_resident: int
    per_matrix_loads: dict = field(default_factory=dict)

    def loads_of(self, matrix_id: int) -> int:
        return self.per_matrix_loads.get(matrix_id, 0)

    def __sub__(self, other: IoReport) -> IoReport:
        keys = set(self.per_matrix_loads) | set(other.per_matrix_loads)
        return IoReport(
            self.loads - other.loads,
            self.stores - other.stores,
            self.peak_resident,
            {k: self.loads_of(k) - other.loads_of(k) for k in keys},
        )

    def csv_row(self, algo: str, n: int, m: int, s: int, a_id: int = 0, c_id: int | None = None) -> str:
        """``algo,N,M,S,loads_A,loads_C,stores,peak_resident``."""
        loads_c = self.loads_of(c_id) if c_id is not None else 0
        return (
            f"{algo},{n},{m},{s},{self.loads_of(a_id)},{loads_c},"
            f"{self.stores},{self.peak_resident}"
        )


IO_CSV_HEADER = "algo,N,M,S,loads_A,loads_C,stores,peak_resident"


class View(NamedTuple):
    """Window onto a registered matrix.

    Element ``(r, c)`` of the view is element ``(row_off + r, col_off + c)`` of
    the parent; ``ld`` is the parent's column count for dense storage.
    """

    mid: int
    packed: bool
    ld: int
    row_off: int = 0
    col_off: int = 0

    def shifted(self, drow: int, dcol: int) -> View:
        return self._replace(row_off=self.row_off + drow, col_off=self.col_off + dcol)

    def offset(self, r: int, c: int) -> int:
        R = self.row_off + r
        C = self.col_off + c
        if self.packed:
            return R * (R + 1) // 2 + C
        return R * self.ld + C


class IoLedger:
    """Fast-memory residency set with load / store counters.

    ``compute=False`` selects count-only mode: kernels replay every ledger
    transition but never touch float data.
    """

    def __init__(self, capacity: int, *, compute: bool = True):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self.compute = bool(compute)
        self.counters = np.zeros(4, dtype=np.int64)
        self.matrix_loads = np.zeros(4, dtype=np.int64)
        self.resident_maps: list[np.ndarray] = []
        self._by_object: dict[int, int] = {}
        self._owners: list[object] = []

    # -- registration -------------------------------------------------
    def add_matrix(self, size: int) -> int:
        """Register an anonymous matrix of ``size`` elements; returns its id."""
        mid = len(self.resident_maps)
        self.resident_maps.append(np.zeros(size, dtype=np.uint8))
        if mid >= self.matrix_loads.size:
            grown = np.zeros(2 * self.matrix_loads.size, dtype=np.int64)
            grown[: self.matrix_loads.size] = self.matrix_loads
            self.matrix_loads = grown
        self._owners.append(None)
        return mid

    def attach(self, M: Matrix | PackedTriangular) -> int:
        """Id of ``M`` in this ledger, registering it on first use."""
        key = id(M)
        if key not in self._by_object:
            mid = self.add_matrix(M.data.size)
            self._by_object[key] = mid
            self._owners[mid] = M
        return self._by_object[key]

    def view(self, M: Matrix | PackedTriangular) -> View:
        mid = self.attach(M)
        if isinstance(M, PackedTriangular):
            return View(mid, True, M.n)
        return View(mid, False, M.cols)

    # -- counters -----------------------------------------------------
    @property
    def loads(self) -> int:
        return int(self.counters[LOADS])

    @property
    def stores(self) -> int:
        return int(self.counters[STORES])

    @property
    def resident_count(self) -> int:
        return int(self.counters[RESIDENT])

    @property
    def peak_resident(self) -> int:
        return int(self.counters[PEAK])

    def is_resident(self, addr: ElementAddr) -> bool:
        return bool(self.resident_maps[addr.matrix_id][addr.offset])

    # -- transitions --------------------------------------------------
    def load(self, addr: ElementAddr) -> None:
        res = self.resident_maps[addr.matrix_id]
        if res[addr.offset]:
            return
        if self.counters[RESIDENT] >= self.capacity:
            raise CapacityError(
                f"loading {addr} would exceed fast-memory capacity {self.capacity}"
            )
        res[addr.offset] = 1
        self.counters[LOADS] += 1
        self.counters[RESIDENT] += 1
        self.matrix_loads[addr.matrix_id] += 1
        if self.counters[RESIDENT] > self.counters[PEAK]:
            self.counters[PEAK] = self.counters[RESIDENT]

    def evict(self, addr: ElementAddr, dirty: bool) -> None:
        res = self.resident_maps[addr.matrix_id]
        if not res[addr.offset]:
            raise ResidencyError(f"evicting non-resident element {addr}")
        res[addr.offset] = 0
        self.counters[RESIDENT] -= 1
        if dirty:
            self.counters[STORES] += 1

    def require_resident(self, addrs: Iterable[ElementAddr]) -> None:
        for addr in addrs:
            if not self.resident_maps[addr.matrix_id][addr.offset]:
                raise ResidencyError(f"operand {addr} is not in fast memory")

    def snapshot(self) -> IoReport:
        per = {mid: int(self.matrix_loads[mid]) for mid in range(len(self.resident_maps))}
        return IoReport(self.loads, self.stores, self.peak_resident, per)
