"""Dense and packed-triangular storage, deterministic random inputs, and the
classical triple-loop SYRK / Cholesky kernels used as numerical ground truth.

Packed storage keeps the lower triangle row by row: element ``(i, j)`` with
``i >= j`` lives at offset ``i*(i+1)/2 + j``.

Random inputs come from SplitMix64 so that they can be regenerated in any
language.  The ``i``-th draw (``i = 0, 1, ...``) for a seed ``s`` is::

    z = (s + (i + 1) * 0x9E3779B97F4A7C15) mod 2**64
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 mod 2**64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB mod 2**64
    z = z ^ (z >> 31)
    u = (z >> 11) * 2**-53            # uniform in [0, 1)

which is exactly the output stream of the reference SplitMix64 generator
seeded with ``s``.  Matrices are filled in row-major order.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Matrix",
    "NotPositiveDefiniteError",
    "PackedTriangular",
    "packed_offset",
    "packed_size",
    "random_matrix",
    "random_spd",
    "read_matrix",
    "reference_cholesky",
    "reference_syrk",
    "splitmix64_uniform",
    "write_matrix",
]

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

MAGIC = b"SYMKMAT1"
_HEADER = struct.Struct("<8sIIB7x")


class NotPositiveDefiniteError(ValueError):
    """Raised when a Cholesky pivot is not strictly positive."""

    def __init__(self, column: int, pivot: float):
        super().__init__(f"matrix is not positive definite: pivot {pivot!r} at column {column}")
        self.column = column
        self.pivot = pivot


def packed_size(n: int) -> int:
    return n * (n + 1) // 2


def packed_offset(i: int, j: int, n: int) -> int:
    """Offset of lower-triangle element ``(i, j)`` in packed storage of side ``n``."""
    if not (0 <= j <= i < n):
        raise IndexError(f"({i}, {j}) is not a lower-triangle index for side {n}")
    return i * (i + 1) // 2 + j


@dataclass(eq=False)
class Matrix:
    """Dense row-major ``rows x cols`` float64 matrix."""

    rows: int
    cols: int
    data: np.ndarray

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("matrix dimensions must be positive")
        self.data = np.ascontiguousarray(self.data, dtype=np.float64).reshape(-1)
        if self.data.size != self.rows * self.cols:
            raise ValueError(
                f"data has {self.data.size} elements, expected {self.rows * self.cols}"
            )

    @classmethod
    def zeros(cls, rows: int, cols: int) -> Matrix:
        return cls(rows, cols, np.zeros(rows * cols))

    @classmethod
    def from_array(cls, arr) -> Matrix:
        arr = np.atleast_2d(np.asarray(arr, dtype=np.float64))
        return cls(arr.shape[0], arr.shape[1], arr.ravel())

    @property
    def size(self) -> int:
        return self.rows * self.cols

    def to_array(self) -> np.ndarray:
        return self.data.reshape(self.rows, self.cols).copy()

    def copy(self) -> Matrix:
        return Matrix(self.rows, self.cols, self.data.copy())

    def __getitem__(self, idx):
        i, j = idx
        return float(self.data[i * self.cols + j])


@dataclass(eq=False)
class PackedTriangular:
    """Lower triangle of an ``n x n`` matrix, ``n(n+1)/2`` floats row by row."""

    n: int
    data: np.ndarray

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("side length must be positive")
        self.data = np.ascontiguousarray(self.data, dtype=np.float64).reshape(-1)
        if self.data.size != packed_size(self.n):
            raise ValueError(
                f"data has {self.data.size} elements, expected {packed_size(self.n)}"
            )

    @classmethod
    def zeros(cls, n: int) -> PackedTriangular:
        return cls(n, np.zeros(packed_size(n)))

    @classmethod
    def from_dense(cls, arr) -> PackedTriangular:
        """Pack the lower triangle of a square array (upper part ignored)."""
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("expected a square 2-D array")
        rows, cols = np.tril_indices(arr.shape[0])
        return cls(arr.shape[0], arr[rows, cols])

    @property
    def size(self) -> int:
        return self.data.size

    def lower(self) -> np.ndarray:
        """Dense copy with zeros above the diagonal."""
        out = np.zeros((self.n, self.n))
        out[np.tril_indices(self.n)] = self.data
        return out

    def symmetric(self) -> np.ndarray:
        low = self.lower()
        return low + np.tril(low, -1).T

    def copy(self) -> PackedTriangular:
        return PackedTriangular(self.n, self.data.copy())

    def __getitem__(self, idx):
        i, j = idx
        if j > i:
            i, j = j, i
        return float(self.data[packed_offset(i, j, self.n)])


def splitmix64_uniform(count: int, seed: int) -> np.ndarray:
    """``count`` uniform [0, 1) doubles from the SplitMix64 stream for ``seed``."""
    state = np.uint64(seed % (1 << 64))
    counter = np.arange(1, count + 1, dtype=np.uint64)
    z = state + counter * _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def random_matrix(rows: int, cols: int, seed: int) -> Matrix:
    """Dense matrix with entries ``2u - 1`` (uniform in [-1, 1))."""
    return Matrix(rows, cols, 2.0 * splitmix64_uniform(rows * cols, seed) - 1.0)


def random_spd(n: int, seed: int) -> PackedTriangular:
    """Lower triangle of ``G @ G.T + n*I`` with ``G`` uniform [0, 1) entries."""
    if n < 1:
        raise ValueError("n must be >= 1")
    g = splitmix64_uniform(n * n, seed).reshape(n, n)
    a = g @ g.T
    a[np.diag_indices(n)] += n
    return PackedTriangular.from_dense(a)


def reference_syrk(A: Matrix, C: PackedTriangular) -> PackedTriangular:
    """``C + lower(A @ A.T)`` by the plain i / j / k loop order; returns a new matrix."""
    if A.rows != C.n:
        raise ValueError(f"A has {A.rows} rows but C has side {C.n}")
    a = A.data.reshape(A.rows, A.cols)
    out = C.data.copy()
    for i in range(A.rows):
        base = i * (i + 1) // 2
        for j in range(i + 1):
            # innermost k loop
            out[base + j] += float(np.dot(a[i], a[j]))
    return PackedTriangular(C.n, out)


def reference_cholesky(A: PackedTriangular) -> PackedTriangular:
    """Unblocked right-looking Cholesky; returns ``L`` with ``L @ L.T == A``."""
    n = A.n
    low = A.lower()
    for k in range(n):
        pivot = low[k, k]
        if not pivot > 0.0:
            raise NotPositiveDefiniteError(k, float(pivot))
        low[k, k] = math.sqrt(pivot)
        low[k + 1 :, k] /= low[k, k]
        for i in range(k + 1, n):
            # update operations A[i, j] -= A[i, k] * A[j, k] for k < j <= i
            low[i, k + 1 : i + 1] -= low[i, k] * low[k + 1 : i + 1, k]
    return PackedTriangular.from_dense(low)


def write_matrix(path, M: Matrix | PackedTriangular) -> None:
    if isinstance(M, PackedTriangular):
        header = _HEADER.pack(MAGIC, M.n, M.n, 1)
    else:
        header = _HEADER.pack(MAGIC, M.rows, M.cols, 0)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(M.data.astype("<f8").tobytes())


def read_matrix(path) -> Matrix | PackedTriangular:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError("file too short for a matrix header")
    magic, rows, cols, flag = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if raw[17:24] != bytes(7):
        raise ValueError("non-zero header padding")
    payload = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).astype(np.float64)
    if flag == 0:
        return Matrix(rows, cols, payload)
    if flag == 1:
        if rows != cols:
            raise ValueError("packed matrix must be square")
        return PackedTriangular(rows, payload)
    raise ValueError(f"unknown storage flag {flag}")
