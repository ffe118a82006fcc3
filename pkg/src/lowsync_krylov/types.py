"""Type definitions for lowsync-krylov."""

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from numpy.typing import NDArray

Array = NDArray[np.float64]


class ParadigmKind(Enum):
    """Block inner product paradigm."""
    CLASSICAL = "classical"      # S = R^{s x s}, <X, Y> = X^T Y
    GLOBAL = "global"            # S = R I_s, <X, Y> = trace(X^T Y)/s I_s

    @property
    def prefix(self) -> str:
        return "cl" if self is ParadigmKind.CLASSICAL else "gl"


class MuscleKind(Enum):
    """Intraorthogonalization routine applied to a single block vector."""
    CHOLQR = "cholqr"
    HOUSEQR = "houseqr"
    MGS_SVL = "mgs_svl"          # column-wise one-sync MGS, T by multiplication
    MGS_LTS = "mgs_lts"          # column-wise one-sync MGS, T by triangular solve
    GLOBAL_NORM = "global_norm"  # global paradigm only

    @property
    def display(self) -> str:
        return {
            MuscleKind.CHOLQR: "CholQR",
            MuscleKind.HOUSEQR: "HouseQR",
            MuscleKind.MGS_SVL: "MGSSVL",
            MuscleKind.MGS_LTS: "MGSLTS",
            MuscleKind.GLOBAL_NORM: "GlobalNorm",
        }[self]


class SkeletonKind(Enum):
    """Block Gram-Schmidt skeleton driving the Arnoldi process."""
    BMGS = "bmgs"
    BCGS_PIP = "bcgs_pip"
    BCGS_PIO = "bcgs_pio"
    BMGS_SVL = "bmgs_svl"
    BMGS_LTS = "bmgs_lts"
    BMGS_CWY = "bmgs_cwy"
    BMGS_ICWY = "bmgs_icwy"
    BCGS_IRO_LS = "bcgs_iro_ls"

    @property
    def display(self) -> str:
        return self.value.upper().replace("_", "")


class ModificationKind(Enum):
    """Low-rank modification of the projected matrix."""
    NONE = "none"                # block FOM
    HARMONIC = "harmonic"        # block GMRES

    @classmethod
    def _missing_(cls, value: object) -> Optional["ModificationKind"]:
        aliases = {"fom": cls.NONE, "gmres": cls.HARMONIC}
        if isinstance(value, str):
            return aliases.get(value.lower())
        return None

    @property
    def display(self) -> str:
        return "FOM" if self is ModificationKind.NONE else "GMRES"


class SolveStatus(Enum):
    """Terminal state of a restarted solve."""
    CONVERGED = "converged"
    MAX_CYCLES_EXHAUSTED = "max_cycles_exhausted"
    DEAD = "dead"                # adaptive m shrank to 0


class DiagnosticsLevel(Enum):
    """How often the expensive stability diagnostics are evaluated."""
    NONE = "none"
    PER_CYCLE = "cycle"
    PER_ITERATION = "iteration"


class SyncSource(Enum):
    """Kernel family a sync point is charged to."""
    INNER_PROD = "inner_prod"
    INTRA_ORTHO = "intra_ortho"


@dataclass
class CholOutcome:
    """Upper Cholesky factor plus the NaN-flag."""
    factor: Array
    breakdown: bool


@dataclass
class IOResult:
    """Scaling quotient of one block vector: X = Q R."""
    Q: Array
    R: Array                     # b x b; 1 x 1 under the global paradigm
    breakdown: bool
    input_norm: float            # ||X||_F, used for invariant-subspace detection
    T: Optional[Array] = None    # MGS_SVL / MGS_LTS only


@dataclass
class KrylovBasis:
    """Block vectors V_1, ..., V_k stored side by side in one n x (k s) panel."""
    n: int
    s: int
    k_blocks: int
    panel: Array

    def block(self, j: int) -> Array:
        """Block vector j (0-based)."""
        return self.panel[:, j * self.s:(j + 1) * self.s]

    def leading(self, k: int) -> Array:
        """The first k block vectors."""
        return self.panel[:, : k * self.s]


@dataclass
class BlockHessenberg:
    """
    Block upper Hessenberg H_{k+1,k} in coefficient storage.

    Each block is b x b with b = s (classical) or b = 1 (global, where the scalar
    alpha stands for alpha I_s).
    """
    m_blocks: int
    s: int
    paradigm: ParadigmKind
    payload: Array

    @property
    def unit(self) -> int:
        return self.s if self.paradigm is ParadigmKind.CLASSICAL else 1

    def block(self, i: int, j: int) -> Array:
        b = self.unit
        return self.payload[i * b:(i + 1) * b, j * b:(j + 1) * b]

    @property
    def principal(self) -> Array:
        """H_k, the square part without the last block row."""
        return self.payload[: self.m_blocks * self.unit, :]

    @property
    def subdiagonal(self) -> Array:
        """H_{k+1,k}, the last block row restricted to the last block column."""
        b = self.unit
        return self.payload[self.m_blocks * b:, (self.m_blocks - 1) * b:]

    def to_dense(self) -> Array:
        """Assemble the full (k+1)s x ks matrix."""
        if self.paradigm is ParadigmKind.CLASSICAL:
            return np.array(self.payload, copy=True)
        return np.kron(self.payload, np.eye(self.s))


@dataclass
class ArnoldiOutcome:
    """Block Arnoldi relation data of one (possibly truncated) cycle."""
    basis: KrylovBasis
    H: BlockHessenberg
    B_factor: Array
    completed: int
    paradigm: ParadigmKind
    breakdown_at: Optional[int] = None
    invariant: bool = False      # H_{k+1,k} = 0: the Krylov space is invariant

    @property
    def unit(self) -> int:
        return self.H.unit


@dataclass
class CycleResult:
    """Projected solve of one cycle truncated to k iterations."""
    k: int
    Xi: Array
    cospatial: Array
    U_gen: Array
    res_est: float


@dataclass
class ResultRow:
    """One line of results.csv."""
    problem: str
    label: str
    time_s: float
    accel_pct: float
    cycle_ct: int
    iter_ct: int
    a_ct: int
    v_ct: int
    sync_ct: int
    status: str
