"""
Block inner product paradigms and intraorthogonalization muscles.

Small matrices produced by a paradigm are kept in coefficient storage: every element
of the paradigm's scalar ring occupies a b x b cell, with b = s in the classical
paradigm and b = 1 in the global paradigm, where the stored scalar alpha stands for
alpha I_s. All skeleton algebra (Hessenberg columns, Gram blocks, triangular factors)
therefore runs on plain arrays of size (p b) x (q b) regardless of the paradigm.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .contracts import contract
from .errors import ConfigurationError
from .instrument import count_sync
from .kernels import EPS, cholesky_flagged, qr_pos, tri_solve
from .types import Array, IOResult, MuscleKind, ParadigmKind, SkeletonKind, SyncSource

logger = logging.getLogger(__name__)

CLASSICAL_MUSCLES = frozenset(
    {MuscleKind.CHOLQR, MuscleKind.HOUSEQR, MuscleKind.MGS_SVL, MuscleKind.MGS_LTS}
)


@dataclass(frozen=True)
class Paradigm:
    """The (S, <.,.>_S, N) triple for block width s."""

    kind: ParadigmKind
    s: int

    def __post_init__(self) -> None:
        if self.s < 1:
            raise ConfigurationError(f"block width must be positive, got {self.s}")

    @property
    def unit(self) -> int:
        """Side length of one coefficient cell."""
        return self.s if self.kind is ParadigmKind.CLASSICAL else 1

    @property
    def is_global(self) -> bool:
        return self.kind is ParadigmKind.GLOBAL

    def apply(self, V: Array, C: Array) -> Array:
        """The block product V C for an n x (p s) panel and p b x q b coefficients."""
        if not self.is_global:
            return V @ C
        n = V.shape[0]
        p, q = C.shape
        out = np.einsum("rpc,pq->rqc", V.reshape(n, p, self.s), C)
        return out.reshape(n, q * self.s)

    def divide(self, X: Array, R: Array) -> Array:
        """X R^{-1} for an upper triangular scaling quotient R."""
        if self.is_global:
            return X / R[0, 0]
        return tri_solve(R, X, side="right")

    def solve_transposed(self, R: Array, C: Array) -> Array:
        """R^{-T} C for an upper triangular scaling quotient R."""
        if self.is_global:
            return C / R[0, 0]
        return tri_solve(R, C, side="left", transpose=True)

    def expand(self, C: Array) -> Array:
        """Dense matrix represented by the coefficients C."""
        if not self.is_global:
            return np.asarray(C)
        return np.kron(C, np.eye(self.s))

    def norm(self, C: Array) -> float:
        """Frobenius norm of the dense matrix represented by C."""
        scale = np.sqrt(self.s) if self.is_global else 1.0
        return float(scale * np.linalg.norm(C))

    def identity(self, blocks: int) -> Array:
        return np.eye(blocks * self.unit)


@dataclass
class BlockGram:
    """Value of <X, Y>_S for a p-block X and q-block Y."""

    paradigm: Paradigm
    p: int
    q: int
    payload: Array

    def block(self, i: int, j: int) -> Array:
        b = self.paradigm.unit
        return self.payload[i * b:(i + 1) * b, j * b:(j + 1) * b]

    def to_dense(self) -> Array:
        return self.paradigm.expand(self.payload)


def _blocks_of(paradigm: Paradigm, X: Array) -> bool:
    return X.ndim == 2 and X.shape[1] % paradigm.s == 0


@contract(
    requires=[
        (lambda X, Y, **_: X.shape[0] == Y.shape[0], "X and Y must have the same rows"),
        (lambda paradigm, X, Y, **_: _blocks_of(paradigm, X) and _blocks_of(paradigm, Y),
         "column counts must be multiples of s"),
    ],
)
def inner_prod(paradigm: Paradigm, X: Array, Y: Array) -> BlockGram:
    """One fused block inner product; always exactly one sync point."""
    count_sync(SyncSource.INNER_PROD, 1)
    s = paradigm.s
    p, q = X.shape[1] // s, Y.shape[1] // s
    if not paradigm.is_global:
        return BlockGram(paradigm, p, q, X.T @ Y)
    n = X.shape[0]
    G = np.einsum("rpc,rqc->pq", X.reshape(n, p, s), Y.reshape(n, q, s)) / s
    return BlockGram(paradigm, p, q, G)


def check_muscle(paradigm: Paradigm, muscle: MuscleKind) -> None:
    if paradigm.is_global and muscle is not MuscleKind.GLOBAL_NORM:
        raise ConfigurationError(f"muscle {muscle.display} is not defined for the global paradigm")
    if not paradigm.is_global and muscle not in CLASSICAL_MUSCLES:
        raise ConfigurationError(f"muscle {muscle.display} is only defined for the global paradigm")


def resolve_muscle(
    skeleton: SkeletonKind, paradigm: Paradigm, muscle: Optional[MuscleKind] = None
) -> MuscleKind:
    """
    Muscle a skeleton runs with.

    The global paradigm always uses GlobalNorm. BMGS-SVL and BMGS-LTS are forced onto
    their column-wise counterparts; every other skeleton defaults to CholQR.
    """
    if paradigm.is_global:
        chosen = muscle or MuscleKind.GLOBAL_NORM
        check_muscle(paradigm, chosen)
        return chosen
    forced = {
        SkeletonKind.BMGS_SVL: MuscleKind.MGS_SVL,
        SkeletonKind.BMGS_LTS: MuscleKind.MGS_LTS,
    }.get(skeleton)
    if forced is not None:
        if muscle is not None and muscle is not forced:
            raise ConfigurationError(
                f"{skeleton.display} requires muscle {forced.display}, got {muscle.display}"
            )
        return forced
    chosen = muscle or MuscleKind.CHOLQR
    check_muscle(paradigm, chosen)
    return chosen


def muscle_sync_cost(muscle: MuscleKind, columns: int) -> int:
    """Sync points charged for one call on a block with the given column count."""
    if muscle in (MuscleKind.MGS_SVL, MuscleKind.MGS_LTS):
        return 1 + 3 * (columns - 1)
    return 1


@contract(
    requires=[(lambda X, **_: X.shape[0] >= X.shape[1], "need n >= s")],
)
def intra_ortho(paradigm: Paradigm, muscle: MuscleKind, X: Array) -> IOResult:
    """Scaling quotient X = Q R by the given muscle."""
    check_muscle(paradigm, muscle)
    X = np.asarray(X, dtype=np.float64)
    input_norm = float(np.linalg.norm(X))
    if muscle is MuscleKind.GLOBAL_NORM:
        return _global_norm(paradigm, X, input_norm)
    if muscle is MuscleKind.CHOLQR:
        return _cholqr(X, input_norm)
    if muscle is MuscleKind.HOUSEQR:
        return _houseqr(X, input_norm)
    return _mgs_lowsync(X, input_norm, lts=muscle is MuscleKind.MGS_LTS)


def _failed(X: Array, input_norm: float, T: Optional[Array] = None) -> IOResult:
    s = X.shape[1]
    return IOResult(
        Q=np.full_like(X, np.nan),
        R=np.full((s, s), np.nan),
        breakdown=True,
        input_norm=input_norm,
        T=T,
    )


def _global_norm(paradigm: Paradigm, X: Array, input_norm: float) -> IOResult:
    count_sync(SyncSource.INTRA_ORTHO, 1)
    alpha = input_norm / np.sqrt(paradigm.s)
    if not np.isfinite(alpha) or alpha == 0.0:
        return IOResult(
            Q=np.full_like(X, np.nan), R=np.array([[alpha]]), breakdown=True,
            input_norm=input_norm,
        )
    return IOResult(Q=X / alpha, R=np.array([[alpha]]), breakdown=False, input_norm=input_norm)


def _cholqr(X: Array, input_norm: float) -> IOResult:
    count_sync(SyncSource.INTRA_ORTHO, 1)
    chol = cholesky_flagged(X.T @ X)
    if chol.breakdown:
        return _failed(X, input_norm)
    return IOResult(
        Q=tri_solve(chol.factor, X, side="right"), R=chol.factor, breakdown=False,
        input_norm=input_norm,
    )


def _houseqr(X: Array, input_norm: float) -> IOResult:
    count_sync(SyncSource.INTRA_ORTHO, 1)
    if not np.all(np.isfinite(X)):
        return _failed(X, input_norm)
    Q, R = qr_pos(X)
    if np.min(np.diag(R)) <= max(X.shape) * EPS * input_norm:
        return _failed(X, input_norm)
    return IOResult(Q=Q, R=R, breakdown=False, input_norm=input_norm)


def _mgs_lowsync(X: Array, input_norm: float, lts: bool) -> IOResult:
    """
    Column-wise one-sync MGS.

    Each column after the first costs three reductions: projection coefficients,
    the new norm, and the inner products that extend T.
    """
    n, s = X.shape
    Q = np.zeros_like(X)
    R = np.zeros((s, s))
    T = np.eye(s)

    count_sync(SyncSource.INTRA_ORTHO, 1)
    nrm = float(np.linalg.norm(X[:, 0]))
    if not np.isfinite(nrm) or nrm == 0.0:
        return _failed(X, input_norm, T)
    Q[:, 0] = X[:, 0] / nrm
    R[0, 0] = nrm

    for k in range(1, s):
        Tk = T[:k, :k]
        count_sync(SyncSource.INTRA_ORTHO, 1)
        y = Q[:, :k].T @ X[:, k]
        if lts:
            r = scipy.linalg.solve_triangular(Tk, y, trans="T", lower=False)
        else:
            r = Tk.T @ y
        w = X[:, k] - Q[:, :k] @ r

        count_sync(SyncSource.INTRA_ORTHO, 1)
        nrm = float(np.linalg.norm(w))
        scale = float(np.hypot(np.linalg.norm(r), nrm))
        if not np.isfinite(nrm) or nrm <= n * EPS * scale:
            return _failed(X, input_norm, T)
        q = w / nrm

        count_sync(SyncSource.INTRA_ORTHO, 1)
        z = Q[:, :k].T @ q
        T[:k, k] = z if lts else -Tk @ z

        Q[:, k] = q
        R[:k, k] = r
        R[k, k] = nrm

    return IOResult(Q=Q, R=R, breakdown=False, input_norm=input_norm, T=T)


def stacked_intra_ortho(
    paradigm: Paradigm, muscle: MuscleKind, W: Array, H: Array
) -> tuple[Array, Array, bool]:
    """
    R factors of the two halves of the stacked object [[W, 0], [0, H]].

    Only the 2s x 2s (classical) scaling quotient is formed; the two diagonal blocks
    of R are returned. One muscle call.
    """
    if paradigm.is_global:
        count_sync(SyncSource.INTRA_ORTHO, 1)
        rw = np.linalg.norm(W) / np.sqrt(paradigm.s)
        rh = np.linalg.norm(H)
        ok = bool(np.isfinite(rw) and np.isfinite(rh))
        return np.array([[rw]]), np.array([[rh]]), not ok
    n, s = W.shape
    rows = H.shape[0]
    Z = np.zeros((n + rows, 2 * s))
    Z[:n, :s] = W
    Z[n:, s:] = H
    io = intra_ortho(paradigm, muscle, Z)
    return io.R[:s, :s], io.R[s:, s:], io.breakdown
