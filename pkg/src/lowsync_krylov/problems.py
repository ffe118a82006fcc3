"""
Benchmark problems: generated matrices, Matrix Market files, ILU(0) and ground truth.

Preconditioning is from the left. A preconditioned problem hands the solver the
operator U^{-1} L^{-1} A and the right-hand side U^{-1} L^{-1} B, so residuals and
tolerances are measured in the preconditioned norm while the solution X_star is the
same as for the unpreconditioned system.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.io
import scipy.sparse
import scipy.sparse.linalg

from .errors import (
    FactorizationError,
    MatrixMarketError,
    SingularFactorError,
    UnsupportedFormatError,
    UsageError,
)
from .kernels import BlockOperator, SparseOperator, frobenius_norm, spmv_block
from .types import Array

logger = logging.getLogger(__name__)

DIRECT_SOLVE_TOL = 1e-10

CSR = scipy.sparse.csr_array


def _intc_indexed(M: CSR) -> CSR:
    M = CSR(M)
    M.indices = M.indices.astype(np.intc, copy=False)
    M.indptr = M.indptr.astype(np.intc, copy=False)
    return M


@dataclass
class ILU0Factors:
    """Unit lower L and upper U sharing the sparsity pattern of A."""

    L: CSR
    U: CSR

    def __post_init__(self) -> None:
        # spsolve_triangular only accepts C int index arrays
        self.L = _intc_indexed(self.L)
        self.U = _intc_indexed(self.U)

    def solve(self, Y: Array) -> Array:
        """U^{-1} L^{-1} Y."""
        try:
            Z = scipy.sparse.linalg.spsolve_triangular(self.L, Y, lower=True, unit_diagonal=True)
            return np.asarray(scipy.sparse.linalg.spsolve_triangular(self.U, Z, lower=False))
        except np.linalg.LinAlgError as e:
            raise SingularFactorError(f"ILU(0) factor is singular: {e}") from e


@dataclass
class Problem:
    """A linear system A X = B with optional ground truth and preconditioner."""

    name: str
    A: CSR
    B: Array
    X_star: Optional[Array] = None
    precond: Optional[ILU0Factors] = None
    rng_seed: Optional[int] = None

    @property
    def n(self) -> int:
        return int(self.A.shape[0])

    @property
    def s(self) -> int:
        return int(self.B.shape[1])

    def system(self) -> tuple[BlockOperator, Array]:
        """Operator and right-hand side the solver actually sees."""
        if self.precond is None:
            return SparseOperator(self.A), self.B
        return PreconditionedOperator(self.A, self.precond), self.precond.solve(self.B)


class PreconditionedOperator:
    """X -> U^{-1} L^{-1} (A X); one counted matvec per application."""

    def __init__(self, A: CSR, factors: ILU0Factors):
        self.A = CSR(A)
        n = self.A.shape[0]
        if self.A.shape != (n, n) or factors.U.shape != (n, n) or factors.L.shape != (n, n):
            raise UsageError("operator and factors must be square of the same size")
        if np.any(factors.U.diagonal() == 0.0):
            raise SingularFactorError("U factor has a zero diagonal entry")
        self.factors = factors

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape  # type: ignore[return-value]

    def apply(self, X: Array) -> Array:
        return self.factors.solve(spmv_block(self.A, X))


def preconditioned_operator(A: CSR, factors: ILU0Factors) -> PreconditionedOperator:
    return PreconditionedOperator(A, factors)


# -- generators --------------------------------------------------------------------


def tridiag(n: int) -> Problem:
    """Symmetric tridiagonal A with off-diagonals 1 and diagonal -1, ..., -n; s = 2."""
    if n < 2:
        raise UsageError(f"tridiag needs n >= 2, got {n}")
    off = np.ones(n - 1)
    A = CSR(scipy.sparse.diags_array([off, -np.arange(1.0, n + 1), off], offsets=[-1, 0, 1]))
    B = np.column_stack([np.full(n, 1.0 / np.sqrt(n)), np.arange(1.0, n + 1)])
    return Problem(name="tridiag", A=A, B=B, X_star=direct_solve(A, B))


def laplacian_2d(nx: int) -> CSR:
    """Five-point Dirichlet Laplacian on an nx x nx grid (diagonal 4, neighbours -1)."""
    if nx < 2:
        raise UsageError(f"lapl_2d needs nx >= 2, got {nx}")
    T = scipy.sparse.diags_array(
        [-np.ones(nx - 1), 2.0 * np.ones(nx), -np.ones(nx - 1)], offsets=[-1, 0, 1]
    )
    eye = scipy.sparse.eye_array(nx)
    return CSR(scipy.sparse.kron(T, eye) + scipy.sparse.kron(eye, T))


def lapl_2d(nx: int, s: int = 10, seed: int = 0) -> Problem:
    A = laplacian_2d(nx)
    B = np.random.default_rng(seed).uniform(0.0, 1.0, size=(nx * nx, s))
    return Problem(name="lapl_2d", A=A, B=B, X_star=direct_solve(A, B), rng_seed=seed)


# -- Matrix Market -----------------------------------------------------------------

_SUPPORTED_FIELDS = {"real", "integer"}
_SUPPORTED_SYMMETRY = {"general", "symmetric"}


def _check_header(path: Path) -> tuple[int, int]:
    """Validate banner and size line; return the shape."""
    with path.open("r", encoding="ascii", errors="replace") as fh:
        banner = fh.readline()
        tokens = banner.split()
        if len(tokens) != 5 or tokens[0].lower() != "%%matrixmarket":
            raise MatrixMarketError("missing %%MatrixMarket banner", line=1)
        obj, fmt, field, symmetry = (t.lower() for t in tokens[1:])
        if obj != "matrix":
            raise MatrixMarketError(f"unknown object {obj!r}", line=1)
        if fmt not in ("coordinate", "array"):
            raise MatrixMarketError(f"unknown format {fmt!r}", line=1)
        if fmt != "coordinate":
            raise UnsupportedFormatError(f"{fmt} format is not supported", line=1)
        if field not in _SUPPORTED_FIELDS:
            raise UnsupportedFormatError(f"{field} entries are not supported", line=1)
        if symmetry not in _SUPPORTED_SYMMETRY:
            raise UnsupportedFormatError(f"{symmetry} storage is not supported", line=1)

        for lineno, line in enumerate(fh, start=2):
            stripped = line.strip()
            if not stripped or stripped.startswith("%"):
                continue
            parts = stripped.split()
            try:
                rows, cols, _nnz = (int(p) for p in parts)
            except ValueError:
                raise MatrixMarketError(f"bad size line {stripped!r}", line=lineno) from None
            return rows, cols
    raise MatrixMarketError("missing size line")


def read_matrix_market(path: str | Path) -> CSR:
    """Read a real coordinate file, expanding symmetric storage."""
    path = Path(path)
    shape = _check_header(path)
    try:
        A = scipy.io.mmread(path)
    except (ValueError, IndexError) as e:
        raise MatrixMarketError(f"cannot parse {path.name}: {e}") from e
    A = CSR(A, dtype=np.float64)
    A.sum_duplicates()
    A.sort_indices()
    if A.shape != shape:
        raise MatrixMarketError(f"size line says {shape}, entries give {A.shape}")
    logger.debug("read %s: %dx%d, %d nonzeros", path.name, *shape, A.nnz)
    return A


def write_matrix_market(path: str | Path, A: CSR, comment: str = "") -> None:
    """Write A in general coordinate format with round-trip precision."""
    scipy.io.mmwrite(
        Path(path), scipy.sparse.coo_array(A), comment=comment, field="real",
        precision=17, symmetry="general",
    )


# -- factorizations ----------------------------------------------------------------


def ilu0(A: CSR) -> ILU0Factors:
    """ILU(0), IKJ variant, restricted to the pattern of A."""
    A = CSR(A, dtype=np.float64, copy=True)
    n = A.shape[0]
    if A.shape != (n, n):
        raise UsageError(f"ilu0 needs a square matrix, got {A.shape}")
    A.sum_duplicates()
    A.sort_indices()
    indptr, indices, LU = A.indptr, A.indices, A.data

    diag = np.empty(n, dtype=np.int64)
    for i in range(n):
        row = indices[indptr[i]:indptr[i + 1]]
        hit = np.searchsorted(row, i)
        if hit == len(row) or row[hit] != i:
            raise FactorizationError(f"row {i} has no diagonal entry")
        diag[i] = indptr[i] + hit

    for i in range(1, n):
        start, end = indptr[i], indptr[i + 1]
        where = {int(indices[p]): p for p in range(start, end)}
        for p in range(start, diag[i]):
            k = indices[p]
            pivot = LU[diag[k]]
            if pivot == 0.0:
                raise FactorizationError(f"zero pivot in row {k}")
            LU[p] /= pivot
            for q in range(diag[k] + 1, indptr[k + 1]):
                pos = where.get(int(indices[q]))
                if pos is not None:
                    LU[pos] -= LU[p] * LU[q]
    if np.any(LU[diag] == 0.0):
        raise FactorizationError(f"zero pivot in row {int(np.argmax(LU[diag] == 0.0))}")

    rows = np.repeat(np.arange(n), np.diff(indptr))
    lower = indices < rows
    upper = ~lower
    L = CSR(
        (np.concatenate([LU[lower], np.ones(n)]),
         (np.concatenate([rows[lower], np.arange(n)]),
          np.concatenate([indices[lower], np.arange(n)]))),
        shape=(n, n),
    )
    U = CSR((LU[upper], (rows[upper], indices[upper])), shape=(n, n))
    L.sort_indices()
    U.sort_indices()
    return ILU0Factors(L=L, U=U)


def direct_solve(A: CSR, B: Array) -> Array:
    """Sparse LU with partial pivoting; the reference solution X_star."""
    try:
        lu = scipy.sparse.linalg.splu(scipy.sparse.csc_matrix(A), permc_spec="COLAMD")
    except RuntimeError as e:
        raise SingularFactorError(f"A is singular: {e}") from e
    X = lu.solve(np.asarray(B, dtype=np.float64))
    if not np.all(np.isfinite(X)):
        raise SingularFactorError("direct solve produced non-finite values")
    relres = frobenius_norm(B - A @ X) / frobenius_norm(B)
    if relres > DIRECT_SOLVE_TOL:
        logger.warning("direct solve relative residual %.2e exceeds %.0e", relres, DIRECT_SOLVE_TOL)
    return np.asarray(X)


def load_problem(
    path: str | Path,
    s: int,
    seed: int = 0,
    preconditioner: Optional[str] = None,
    name: Optional[str] = None,
) -> Problem:
    """A file-backed problem with uniform(0, 1) right-hand sides."""
    path = Path(path)
    A = read_matrix_market(path)
    if A.shape[0] != A.shape[1]:
        raise UsageError(f"{path.name} is not square: {A.shape}")
    B = np.random.default_rng(seed).uniform(0.0, 1.0, size=(A.shape[0], s))
    precond = None
    if preconditioner == "ilu0":
        precond = ilu0(A)
    elif preconditioner not in (None, "none"):
        raise UsageError(f"unknown preconditioner {preconditioner!r}")
    return Problem(
        name=name or path.stem, A=A, B=B, X_star=direct_solve(A, B), precond=precond,
        rng_seed=seed,
    )
