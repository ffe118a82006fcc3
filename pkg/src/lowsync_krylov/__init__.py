"""lowsync-krylov: low-synchronization block Arnoldi in restarted block FOM/GMRES."""

from .arnoldi import SKELETONS, Skeleton, SkeletonInfo, expected_syncs, make_skeleton
from .contracts import ContractError, contract
from .decorators import get_requirement_registry, requirement
from .errors import (
    BreakdownError,
    ConfigurationError,
    FactorizationError,
    KrylovError,
    MatrixMarketError,
    SingularFactorError,
    SolverBreakdownError,
    UnsupportedFormatError,
    UsageError,
)
from .instrument import ConvergenceRecord, Counters, counting
from .paradigm import Paradigm, inner_prod, intra_ortho
from .problems import Problem, lapl_2d, load_problem, read_matrix_market, tridiag
from .solver import SolveResult, SolverConfig, solve
from .types import (
    DiagnosticsLevel,
    ModificationKind,
    MuscleKind,
    ParadigmKind,
    SkeletonKind,
    SolveStatus,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # Solver
    "solve",
    "SolverConfig",
    "SolveResult",
    # Skeletons
    "SKELETONS",
    "Skeleton",
    "SkeletonInfo",
    "make_skeleton",
    "expected_syncs",
    # Paradigms
    "Paradigm",
    "inner_prod",
    "intra_ortho",
    # Problems
    "Problem",
    "tridiag",
    "lapl_2d",
    "load_problem",
    "read_matrix_market",
    # Instrumentation
    "Counters",
    "ConvergenceRecord",
    "counting",
    # Enums
    "DiagnosticsLevel",
    "ModificationKind",
    "MuscleKind",
    "ParadigmKind",
    "SkeletonKind",
    "SolveStatus",
    # Tooling
    "contract",
    "ContractError",
    "requirement",
    "get_requirement_registry",
    # Errors
    "KrylovError",
    "UsageError",
    "ConfigurationError",
    "SingularFactorError",
    "FactorizationError",
    "SolverBreakdownError",
    "BreakdownError",
    "MatrixMarketError",
    "UnsupportedFormatError",
]
