"""Dense and sparse numerical primitives shared by every higher module."""

from typing import Protocol

import numpy as np
import scipy.linalg
import scipy.sparse

from .contracts import contract
from .errors import SingularFactorError, UsageError
from .instrument import count_matvec
from .types import Array, CholOutcome

EPS = float(np.finfo(np.float64).eps)


def _square(M: Array) -> bool:
    return M.ndim == 2 and M.shape[0] == M.shape[1]


@contract(
    requires=[(lambda S, **_: _square(np.asarray(S)), "S must be square")],
)
def cholesky_flagged(S: Array) -> CholOutcome:
    """
    Upper Cholesky factor of the symmetric part of ``S``.

    Never raises on numerical failure: a non-finite or numerically non-positive
    definite input yields ``breakdown=True`` (the NaN-flag).
    """
    S = np.asarray(S, dtype=np.float64)
    if not np.all(np.isfinite(S)):
        return CholOutcome(factor=np.full_like(S, np.nan), breakdown=True)
    sym = 0.5 * (S + S.T)
    try:
        R = scipy.linalg.cholesky(sym, lower=False, check_finite=False)
    except np.linalg.LinAlgError:
        return CholOutcome(factor=np.full_like(S, np.nan), breakdown=True)
    if not np.all(np.isfinite(R)) or np.any(np.diag(R) <= 0.0):
        return CholOutcome(factor=R, breakdown=True)
    return CholOutcome(factor=R, breakdown=False)


@contract(
    requires=[(lambda X, **_: X.ndim == 2 and X.shape[0] >= X.shape[1], "need n >= s")],
    ensures=[lambda out: bool(np.all(np.diag(out[1]) >= 0.0))],
)
def qr_pos(X: Array) -> tuple[Array, Array]:
    """Householder QR with the signs fixed so that diag(R) >= 0."""
    Q, R = np.linalg.qr(np.asarray(X, dtype=np.float64), mode="reduced")
    signs = np.where(np.diag(R) < 0.0, -1.0, 1.0)
    return Q * signs, R * signs[:, None]


def _orientation(T: Array) -> bool:
    """True for lower triangular input, False for upper; raise otherwise."""
    if not np.any(np.tril(T, -1)):
        return False
    if not np.any(np.triu(T, 1)):
        return True
    raise UsageError("tri_solve expects a triangular matrix")


@contract(
    requires=[(lambda T, **_: _square(T), "T must be square")],
)
def tri_solve(T: Array, B: Array, side: str = "left", transpose: bool = False) -> Array:
    """
    Solve op(T) X = B (side ``left``) or X op(T) = B (side ``right``).

    ``op(T)`` is ``T.T`` when ``transpose`` is set. Upper or lower orientation is read
    off the sparsity of ``T``.
    """
    if side not in ("left", "right"):
        raise UsageError(f"side must be 'left' or 'right', got {side!r}")
    diag = np.diag(T)
    if np.any(diag == 0.0):
        raise SingularFactorError("triangular factor has a zero diagonal entry")
    lower = _orientation(T)
    B = np.asarray(B, dtype=np.float64)
    if side == "left":
        if B.shape[0] != T.shape[0]:
            raise UsageError(f"shape mismatch: T is {T.shape}, B is {B.shape}")
        return scipy.linalg.solve_triangular(
            T, B, trans="T" if transpose else "N", lower=lower, check_finite=False
        )
    if B.shape[-1] != T.shape[0]:
        raise UsageError(f"shape mismatch: T is {T.shape}, B is {B.shape}")
    # X T = B  <=>  T^T X^T = B^T
    return scipy.linalg.solve_triangular(
        T, B.T, trans="N" if transpose else "T", lower=lower, check_finite=False
    ).T


@contract(
    requires=[(lambda X, **_: X.size > 0, "empty matrix")],
)
def condition_number(X: Array) -> float:
    """sigma_max / sigma_min from the full SVD; inf when sigma_min is exactly zero."""
    sigma = scipy.linalg.svdvals(X, check_finite=False)
    if sigma[-1] == 0.0:
        return float("inf")
    return float(sigma[0] / sigma[-1])


def frobenius_norm(X: Array) -> float:
    return float(np.linalg.norm(X, "fro")) if np.size(X) else 0.0


def spectral_norm(X: Array) -> float:
    if np.size(X) == 0:
        return 0.0
    return float(scipy.linalg.svdvals(X, check_finite=False)[0])


@contract(
    requires=[
        (lambda A, X, **_: A.shape[1] == X.shape[0], "dimension mismatch between A and X"),
    ],
)
def spmv_block(A: scipy.sparse.sparray | scipy.sparse.spmatrix, X: Array) -> Array:
    """One application of A to an n x s block; counted as one matvec."""
    count_matvec()
    return np.asarray(A @ X)


class BlockOperator(Protocol):
    """Anything that maps an n x s block to an n x s block."""

    @property
    def shape(self) -> tuple[int, int]: ...

    def apply(self, X: Array) -> Array: ...


class SparseOperator:
    """A sparse matrix applied through ``spmv_block``."""

    def __init__(self, A: scipy.sparse.sparray | scipy.sparse.spmatrix | Array):
        self.A = scipy.sparse.csr_array(A)
        if self.A.shape[0] != self.A.shape[1]:
            raise UsageError(f"operator must be square, got shape {self.A.shape}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape  # type: ignore[return-value]

    def apply(self, X: Array) -> Array:
        return spmv_block(self.A, X)


def as_operator(op: object) -> BlockOperator:
    """Wrap sparse or dense matrices; pass operators through untouched."""
    if hasattr(op, "apply") and hasattr(op, "shape"):
        return op  # type: ignore[return-value]
    if scipy.sparse.issparse(op) or isinstance(op, np.ndarray):
        return SparseOperator(op)  # type: ignore[arg-type]
    raise UsageError(f"cannot use {type(op).__name__} as a block operator")
