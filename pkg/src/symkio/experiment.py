"""Run one schedule under the ledger and compare it with the bounds."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import _backend
from .baseline import ooc_chol, ooc_syrk, tile_side
from .bounds import chol_lower_bound, syrk_lower_bound
from .io_model import IoLedger
from .lbc import choose_block_size, lbc
from .matrix import (
    Matrix,
    PackedTriangular,
    random_matrix,
    random_spd,
    reference_cholesky,
    reference_syrk,
)
from .tbs import build_plan, tbs, tbs_tiled

__all__ = [
    "ALGOS",
    "CSV_HEADER",
    "BoundReport",
    "ExperimentSpec",
    "run",
    "sweep",
]

SYRK_ALGOS = ("ref-syrk", "ooc-syrk", "tbs", "tbs-tiled")
CHOL_ALGOS = ("ref-chol", "ooc-chol", "lbc")
ALGOS = SYRK_ALGOS + CHOL_ALGOS

CSV_HEADER = "algo,N,M,S,b,mode,loads_A,loads_C,stores,peak_resident,lower_bound,ratio"

# compute mode allocates real matrices; refuse anything bigger than this many floats
DEFAULT_COMPUTE_CAP = 1 << 24

SYRK_TOL = 1e-9
CHOL_TOL = 1e-9


@dataclass(frozen=True)
class ExperimentSpec:
    algo: str
    n: int
    s: int
    m: int | None = None
    mode: str = "count"
    seed: int = 0
    b: int | None = None
    compute_cap: int = DEFAULT_COMPUTE_CAP

    def __post_init__(self):
        if self.algo not in ALGOS:
            raise ValueError(f"unknown algorithm {self.algo!r}; choose from {', '.join(ALGOS)}")
        if self.mode not in ("compute", "count"):
            raise ValueError("mode must be 'compute' or 'count'")
        if self.n < 1 or self.s < 1:
            raise ValueError("N and S must be positive")
        if self.is_syrk:
            if self.m is None or self.m < 1:
                raise ValueError(f"{self.algo} needs a positive M")
        elif self.m is not None:
            raise ValueError(f"{self.algo} takes no M")
        if self.b is not None and self.b < 1:
            raise ValueError("b must be positive")
        if self.algo == "tbs-tiled" and self.b is None:
            raise ValueError("tbs-tiled needs a tile side b")
        if self.b is not None and self.algo not in ("tbs-tiled", "lbc"):
            raise ValueError(f"{self.algo} takes no b")
        if self.mode == "compute" and self.footprint > self.compute_cap:
            raise ValueError(
                f"compute mode would allocate {self.footprint} floats (cap {self.compute_cap})"
            )

    @property
    def is_syrk(self) -> bool:
        return self.algo in SYRK_ALGOS

    @property
    def footprint(self) -> int:
        tri = self.n * (self.n + 1) // 2
        return tri + self.n * (self.m or 0)

    @property
    def block(self) -> int | None:
        if self.algo == "lbc":
            return self.b if self.b is not None else choose_block_size(self.n)
        return self.b


@dataclass(frozen=True)
class BoundReport:
    spec: ExperimentSpec
    loads_A: int
    loads_C: int
    stores: int
    peak_resident: int
    lower_bound: float
    upper_envelope: float | None
    ratio: float
    max_error: float | None = None
    violations: tuple[str, ...] = field(default=())

    @property
    def ok(self) -> bool:
        return not self.violations

    def csv_fields(self) -> list:
        s = self.spec
        return [
            s.algo, s.n, "" if s.m is None else s.m, s.s,
            "" if s.block is None else s.block, s.mode,
            self.loads_A, self.loads_C, self.stores, self.peak_resident,
            f"{self.lower_bound:.6f}", f"{self.ratio:.6f}",
        ]

    def csv_row(self) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="").writerow(self.csv_fields())
        return buf.getvalue()

    def as_dict(self) -> dict:
        d = asdict(self)
        d["spec"] = asdict(self.spec)
        return d


def ratio_constant(algo: str) -> float:
    """Leading constant of the lower bound in units of the ratio's denominator."""
    return 1.0 / math.sqrt(2.0) if algo in SYRK_ALGOS else 1.0 / (3.0 * math.sqrt(2.0))


def upper_envelope(spec: ExperimentSpec) -> float | None:
    """Proven-for-this-schedule upper bound on the ratio numerator, or ``None``."""
    N, S = spec.n, spec.s
    # the additive terms are only meaningful with log N >= 1
    lg = max(1.0, math.log2(N))
    if spec.is_syrk:
        M = spec.m
        if spec.algo == "ref-syrk":
            return float(N * N * M)
        if spec.algo == "ooc-syrk":
            t = tile_side(S)
            return N * N * M / t + 2 * N * M + t * M
        b = spec.b or 1
        k = build_plan(max(N, 1), S, b).k
        if k < 3:
            return None
        return N * N * M / ((k - 1) * b) + 16 * N * M * lg
    if spec.algo == "ref-chol":
        return N**3 / 3 + 2 * N * N
    if spec.algo == "ooc-chol":
        # one-tile kernel: N^3/(3t) with t = tile_side(S) <= sqrt(S)
        return N**3 / (3 * tile_side(S)) + 10 * N * N
    b = spec.block
    r = math.sqrt(S)
    return (b * b * N / (3 * r) + b * N * N / (2 * r) + N**3 / (3 * math.sqrt(2) * r)
            + N**3 / (6 * b) + 8 * N * N * lg)


def _naive_syrk(A: Matrix, C: PackedTriangular, ledger: IoLedger):
    # the i / j / k loop order with one C element and two A elements resident
    tile_side(ledger.capacity)
    _backend.kernels().square_syrk(
        ledger, ledger.view(A), ledger.view(C), 0, C.n, A.cols, 1, 1.0, A.data, C.data
    )
    return C, ledger.snapshot()


def _naive_chol(A: PackedTriangular, ledger: IoLedger):
    tile_side(ledger.capacity)
    _backend.kernels().chol_tiled(ledger, ledger.view(A), A.n, 1, A.data)
    return A, ledger.snapshot()


def _inputs(spec: ExperimentSpec, A_in=None):
    compute = spec.mode == "compute"
    if spec.is_syrk:
        if A_in is not None:
            A = A_in
        elif compute:
            A = random_matrix(spec.n, spec.m, spec.seed)
        else:
            A = Matrix.zeros(spec.n, spec.m)
        C = random_spd(spec.n, spec.seed + 1) if compute else PackedTriangular.zeros(spec.n)
        return A, C
    if A_in is not None:
        return A_in, None
    return (random_spd(spec.n, spec.seed) if compute else PackedTriangular.zeros(spec.n)), None


def run(spec: ExperimentSpec, *, A_in=None, result_sink: list | None = None) -> BoundReport:
    """Execute ``spec`` and return measured traffic against the bounds.

    ``A_in`` replaces the random input (dense ``N x M`` for SYRK, packed for
    Cholesky).  When ``result_sink`` is a list the output matrix is appended.
    Invariant failures are recorded in ``violations``; scheduling errors raise.
    """
    compute = spec.mode == "compute"
    ledger = IoLedger(spec.s, compute=compute)
    A, C = _inputs(spec, A_in)
    violations = []
    max_err = None
    if spec.is_syrk:
        C0 = C.copy() if compute else None
        if spec.algo == "ref-syrk":
            out, rep = _naive_syrk(A, C, ledger)
        elif spec.algo == "ooc-syrk":
            out, rep = ooc_syrk(A, C, ledger)
        elif spec.algo == "tbs":
            out, rep = tbs(A, C, ledger)
        else:
            out, rep = tbs_tiled(A, C, ledger, spec.b)
        loads_a = rep.loads_of(ledger.attach(A))
        loads_c = rep.loads_of(ledger.attach(C))
        lower = syrk_lower_bound(spec.n, spec.m, spec.s)
        ratio = loads_a / (spec.n**2 * spec.m / math.sqrt(spec.s))
        if compute:
            ref = reference_syrk(A, C0)
            scale = max(1.0, float(np.max(np.abs(ref.data))))
            max_err = float(np.max(np.abs(out.data - ref.data))) / scale
            if not max_err <= SYRK_TOL:
                violations.append(f"result differs from reference by {max_err:.3e}")
    else:
        A0 = A.copy() if compute else None
        if spec.algo == "ref-chol":
            out, rep = _naive_chol(A, ledger)
        elif spec.algo == "ooc-chol":
            out, rep = ooc_chol(A, ledger)
        else:
            out, rep = lbc(A, ledger, spec.b)
        loads_a, loads_c = rep.loads, 0
        lower = chol_lower_bound(spec.n, spec.s)
        ratio = loads_a / (spec.n**3 / math.sqrt(spec.s))
        if compute:
            low = out.lower()
            orig = A0.symmetric()
            max_err = float(np.max(np.abs(low @ low.T - orig))) / float(np.max(np.abs(orig)))
            if not max_err <= CHOL_TOL:
                violations.append(f"reconstruction error {max_err:.3e}")
    if rep.peak_resident > spec.s:
        violations.append(f"peak resident {rep.peak_resident} exceeds S={spec.s}")
    if ratio < ratio_constant(spec.algo):
        violations.append(f"ratio {ratio:.4f} is below the proven constant")
    env = upper_envelope(spec)
    if env is not None and loads_a > env:
        violations.append(f"loads {loads_a} exceed the envelope {env:.1f}")
    if result_sink is not None:
        result_sink.append(out)
    return BoundReport(
        spec, loads_a, loads_c, rep.stores, rep.peak_resident, lower, env, ratio, max_err,
        tuple(violations),
    )


def sweep(specs, out=None) -> tuple[list[BoundReport], list[tuple[ExperimentSpec, str]]]:
    """Run ``specs`` in order; write the CSV to ``out`` (path or text stream) if given.

    A failing spec contributes no row; its error is returned instead.
    """
    reports, errors = [], []
    for spec in specs:
        try:
            reports.append(run(spec))
        except Exception as exc:  # reported per row, the sweep goes on
            errors.append((spec, f"{type(exc).__name__}: {exc}"))
    if out is not None:
        text = CSV_HEADER + "\n" + "".join(r.csv_row() + "\n" for r in reports)
        if hasattr(out, "write"):
            out.write(text)
        else:
            Path(out).write_text(text)
    return reports, errors
