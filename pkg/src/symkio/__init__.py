"""Out-of-core SYRK and Cholesky schedules on a simulated two-level memory.

The kernels run either in a compiled extension or in a numpy fallback; see
:mod:`symkio._backend`.
"""

from ._backend import name as backend_name
from .baseline import ooc_chol, ooc_syrk, ooc_trsm
from .bounds import (
    balanced_solution,
    brute_force_pmax,
    chol_lower_bound,
    data_accessed,
    hmax_bound,
    pprime_optimum,
    syrk_lower_bound,
)
from .experiment import BoundReport, ExperimentSpec, run, sweep
from .io_model import CapacityError, IoLedger, IoReport, ResidencyError
from .lbc import choose_block_size, lbc
from .matrix import (
    Matrix,
    NotPositiveDefiniteError,
    PackedTriangular,
    packed_offset,
    random_matrix,
    random_spd,
    reference_cholesky,
    reference_syrk,
)
from .tbs import build_plan, tbs, tbs_tiled

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "CapacityError",
    "ExperimentSpec",
    "IoLedger",
    "IoReport",
    "Matrix",
    "NotPositiveDefiniteError",
    "PackedTriangular",
    "ResidencyError",
    "backend_name",
    "balanced_solution",
    "brute_force_pmax",
    "build_plan",
    "choose_block_size",
    "chol_lower_bound",
    "data_accessed",
    "hmax_bound",
    "lbc",
    "ooc_chol",
    "ooc_syrk",
    "ooc_trsm",
    "packed_offset",
    "pprime_optimum",
    "random_matrix",
    "random_spd",
    "reference_cholesky",
    "reference_syrk",
    "run",
    "sweep",
    "syrk_lower_bound",
    "tbs",
    "tbs_tiled",
]
