"""
Block Arnoldi skeletons.

Every skeleton is a resumable computation: ``Skeleton.steps`` yields after each
completed Arnoldi iteration so that a solver can test convergence and stop mid-cycle,
and ``Skeleton.outcome`` exposes the relation data of the iterations completed so far.
A NaN-flag never raises; it ends the generator with ``breakdown_at`` set and the
outcome truncated to the last safe iteration.

Delayed-normalization skeletons (CWY, ICWY, IRO-LS) run passes 1..m+1. Pass k+1
finalizes V_{k+1} and H_{k+1,k}, which completes iteration k; the statements that
prepare the next Hessenberg column run only when the caller asks for iteration k+1.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Callable, ClassVar, Iterator, Literal, Optional

import numpy as np

from .errors import BreakdownError, UsageError
from .instrument import Tally, count_basis_eval, provisional
from .kernels import EPS, BlockOperator, as_operator, cholesky_flagged, tri_solve
from .paradigm import (
    Paradigm,
    inner_prod,
    intra_ortho,
    muscle_sync_cost,
    resolve_muscle,
    stacked_intra_ortho,
)
from .types import (
    Array,
    ArnoldiOutcome,
    BlockHessenberg,
    IOResult,
    KrylovBasis,
    MuscleKind,
    SkeletonKind,
)

logger = logging.getLogger(__name__)

# Squared quantities below INVARIANCE_FACTOR * eps * (k+1) * b of their reference
# count as zero when deciding whether the Krylov space became invariant.
INVARIANCE_FACTOR = 100.0


class _Step(Enum):
    DONE = "done"
    INVARIANT = "invariant"
    BREAKDOWN = "breakdown"


class Skeleton(ABC):
    """Working state of one restart cycle of a block Arnoldi skeleton."""

    kind: ClassVar[SkeletonKind]

    def __init__(
        self,
        op: BlockOperator,
        B: Array,
        m: int,
        paradigm: Paradigm,
        muscle: Optional[MuscleKind] = None,
    ):
        self.op = as_operator(op)
        self.B = np.asarray(B, dtype=np.float64)
        if self.B.ndim != 2:
            raise UsageError("B must be an n x s block")
        n, s = self.B.shape
        if s != paradigm.s:
            raise UsageError(f"B has {s} columns but the paradigm block width is {paradigm.s}")
        if tuple(self.op.shape) != (n, n):
            raise UsageError(f"operator shape {self.op.shape} does not match B with {n} rows")
        if m < 1:
            raise UsageError(f"m must be at least 1, got {m}")
        if n < s:
            raise UsageError(f"need n >= s, got n={n}, s={s}")

        self.paradigm = paradigm
        self.muscle = resolve_muscle(self.kind, paradigm, muscle)
        self.m = m
        self.n, self.s = n, s
        b = paradigm.unit
        self.V = np.zeros((n, (m + 1) * s))
        self.H = np.zeros(((m + 1) * b, m * b))
        self.B_factor = np.full((b, b), np.nan)
        self.completed = 0
        self.breakdown_at: Optional[int] = None
        self.invariant = False
        self.last_step = Tally()             # work of the last committed iteration

    # -- storage helpers ---------------------------------------------------------

    def _rows(self, i0: int, i1: int) -> slice:
        b = self.paradigm.unit
        return slice(i0 * b, i1 * b)

    def _basis(self, k: int) -> Array:
        return self.V[:, : k * self.s]

    def _block(self, j: int) -> Array:
        return self.V[:, j * self.s:(j + 1) * self.s]

    def _set_block(self, j: int, X: Array | float) -> None:
        self.V[:, j * self.s:(j + 1) * self.s] = X

    def _column(self, k: int) -> Array:
        """Entries H_{1:k,k} of column k (1-based)."""
        return self.H[self._rows(0, k), self._rows(k - 1, k)]

    def _set_column(self, k: int, h: Array) -> None:
        self.H[self._rows(0, k), self._rows(k - 1, k)] = h

    def _set_subdiagonal(self, k: int, R: Array | float) -> None:
        self.H[self._rows(k, k + 1), self._rows(k - 1, k)] = R

    def _negligible(self, value: float, reference: float, k: int) -> bool:
        tol = INVARIANCE_FACTOR * EPS * (k + 1) * self.paradigm.unit
        return bool(value <= tol * reference)

    def _factor(self, S: Array, reference: Array, k: int) -> tuple[_Step, Optional[Array]]:
        """Cholesky of the would-be H_{k+1,k}^T H_{k+1,k}, with invariance detection."""
        if self._negligible(float(np.linalg.norm(S)), float(np.linalg.norm(reference)), k):
            return _Step.INVARIANT, None
        chol = cholesky_flagged(S)
        if chol.breakdown:
            return _Step.BREAKDOWN, None
        return _Step.DONE, chol.factor

    def _close_with_io(self, k: int, io: IOResult, h: Array) -> _Step:
        """Store V_{k+1} and H_{k+1,k} from an IO of the projected block."""
        column_sq = self.paradigm.norm(h) ** 2
        if self._negligible(io.input_norm**2, io.input_norm**2 + column_sq, k):
            return _Step.INVARIANT
        if io.breakdown:
            return _Step.BREAKDOWN
        self._set_block(k, io.Q)
        self._set_subdiagonal(k, io.R)
        return _Step.DONE

    # -- driver ------------------------------------------------------------------

    def _start(self) -> _Step:
        io = intra_ortho(self.paradigm, self.muscle, self.B)
        if io.breakdown:
            return _Step.BREAKDOWN
        self._set_block(0, io.Q)
        self.B_factor = io.R
        self._after_start(io)
        return _Step.DONE

    def _after_start(self, io: IOResult) -> None:
        pass

    @abstractmethod
    def _advance(self, k: int) -> _Step:
        """Do the work that completes iteration k."""

    def steps(self) -> Iterator[int]:
        """Yield k after each completed iteration k = 1, ..., m."""
        with provisional() as attempt:
            status = self._start()
            if status is _Step.BREAKDOWN:
                attempt.discard()
        if status is _Step.BREAKDOWN:
            self.breakdown_at = 1
            logger.debug("%s: initial block is numerically rank deficient", self.kind.display)
            return

        while self.completed < self.m:
            k = self.completed + 1
            with provisional() as attempt:
                status = self._advance(k)
                if status is _Step.BREAKDOWN:
                    attempt.discard()
            self.last_step = attempt.pending
            if status is _Step.BREAKDOWN:
                self.breakdown_at = k
                logger.debug("%s: NaN-flag at iteration %d", self.kind.display, k)
                return
            self.completed = k
            if status is _Step.INVARIANT:
                self.invariant = True
                self._set_block(k, 0.0)
                self._set_subdiagonal(k, 0.0)
                logger.debug("%s: invariant subspace at iteration %d", self.kind.display, k)
                yield k
                return
            yield k

    def run(self) -> ArnoldiOutcome:
        for _ in self.steps():
            pass
        return self.outcome()

    def outcome(self) -> ArnoldiOutcome:
        """Relation data of the completed iterations (views into the working storage)."""
        k = self.completed
        b = self.paradigm.unit
        return ArnoldiOutcome(
            basis=KrylovBasis(n=self.n, s=self.s, k_blocks=k + 1, panel=self._basis(k + 1)),
            H=BlockHessenberg(
                m_blocks=k, s=self.s, paradigm=self.paradigm.kind,
                payload=self.H[: (k + 1) * b, : k * b],
            ),
            B_factor=self.B_factor,
            completed=k,
            paradigm=self.paradigm.kind,
            breakdown_at=self.breakdown_at,
            invariant=self.invariant,
        )


class BMGSArnoldi(Skeleton):
    """Block modified Gram-Schmidt: one inner product per previous block."""

    kind = SkeletonKind.BMGS

    def _advance(self, k: int) -> _Step:
        P = self.paradigm
        W = self.op.apply(self._block(k - 1))
        count_basis_eval(2)
        for j in range(k):
            Vj = self._block(j)
            h = inner_prod(P, Vj, W).payload
            W = W - P.apply(Vj, h)
            self.H[self._rows(j, j + 1), self._rows(k - 1, k)] = h
        io = intra_ortho(P, self.muscle, W)
        return self._close_with_io(k, io, self._column(k))


class BCGSPIPArnoldi(Skeleton):
    """Block CGS with a Pythagorean Cholesky step: one fused inner product per iteration."""

    kind = SkeletonKind.BCGS_PIP

    def _advance(self, k: int) -> _Step:
        P = self.paradigm
        kb = k * P.unit
        W = self.op.apply(self._block(k - 1))
        basis = self._basis(k)
        count_basis_eval(2)
        G = inner_prod(P, np.hstack([basis, W]), W).payload
        h, omega = G[:kb], G[kb:]
        self._set_column(k, h)
        status, R = self._factor(omega - h.T @ h, omega, k)
        if status is not _Step.DONE:
            return status
        count_basis_eval(1)
        self._set_block(k, P.divide(W - P.apply(basis, h), R))
        self._set_subdiagonal(k, R)
        return _Step.DONE


class BCGSPIOArnoldi(Skeleton):
    """Block CGS with a Pythagorean step on the stacked scaling quotient."""

    kind = SkeletonKind.BCGS_PIO

    def _advance(self, k: int) -> _Step:
        P = self.paradigm
        W = self.op.apply(self._block(k - 1))
        basis = self._basis(k)
        count_basis_eval(1)
        h = inner_prod(P, basis, W).payload
        self._set_column(k, h)
        RW, RH, failed = stacked_intra_ortho(P, self.muscle, W, h)
        if failed:
            return _Step.BREAKDOWN
        gram = RW.T @ RW
        status, R = self._factor(gram - RH.T @ RH, gram, k)
        if status is not _Step.DONE:
            return status
        count_basis_eval(1)
        self._set_block(k, P.divide(W - P.apply(basis, h), R))
        self._set_subdiagonal(k, R)
        return _Step.DONE


class _BMGSLowSync(Skeleton):
    """BMGS with the correction matrix T applied by multiplication or by solve."""

    solve_t: ClassVar[bool]

    def __init__(self, *args: object, **kwargs: object):
        super().__init__(*args, **kwargs)  # type: ignore[arg-type]
        self.T = np.eye((self.m + 1) * self.paradigm.unit)

    def _store_diagonal(self, j: int, io: IOResult) -> None:
        if io.T is not None:
            self.T[self._rows(j, j + 1), self._rows(j, j + 1)] = io.T

    def _after_start(self, io: IOResult) -> None:
        self._store_diagonal(0, io)

    def _advance(self, k: int) -> _Step:
        P = self.paradigm
        kb = k * P.unit
        W = self.op.apply(self._block(k - 1))
        basis = self._basis(k)
        count_basis_eval(1)
        Y = inner_prod(P, basis, W).payload
        Tk = self.T[:kb, :kb]
        h = tri_solve(Tk, Y, side="left", transpose=True) if self.solve_t else Tk.T @ Y
        self._set_column(k, h)

        count_basis_eval(1)
        io = intra_ortho(P, self.muscle, W - P.apply(basis, h))
        status = self._close_with_io(k, io, h)
        if status is not _Step.DONE:
            return status
        self._store_diagonal(k, io)

        count_basis_eval(1)
        Z = inner_prod(P, basis, self._block(k)).payload
        T_new = self.T[self._rows(k, k + 1), self._rows(k, k + 1)]
        if self.solve_t:
            self.T[:kb, self._rows(k, k + 1)] = Z @ T_new
        else:
            self.T[:kb, self._rows(k, k + 1)] = -Tk @ Z @ T_new
        return _Step.DONE


class BMGSSVLArnoldi(_BMGSLowSync):
    kind = SkeletonKind.BMGS_SVL
    solve_t = False


class BMGSLTSArnoldi(_BMGSLowSync):
    kind = SkeletonKind.BMGS_LTS
    solve_t = True


class _DelayedNormalization(Skeleton):
    """Shared pass structure of the one-sync skeletons that normalize one pass late."""

    def __init__(self, *args: object, **kwargs: object):
        super().__init__(*args, **kwargs)  # type: ignore[arg-type]
        self.U: Optional[Array] = None
        self.W: Optional[Array] = None
        self._Y: Optional[Array] = None
        self._Z: Optional[Array] = None
        self._Ptil: Optional[Array] = None
        self._R: Optional[Array] = None

    def _advance(self, k: int) -> _Step:
        if k == 1:
            self._first_pass()
        else:
            self._extend(k)
        return self._close_pass(k)

    def _fused_gram(self, k: int, W: Array) -> tuple[Array, Array, Array, Array]:
        """<[V_k U], [U W]> split into Y, Z, Omega, P-tilde."""
        assert self.U is not None
        P = self.paradigm
        kb = k * P.unit
        b = P.unit
        count_basis_eval(2)
        G = inner_prod(
            P, np.hstack([self._basis(k), self.U]), np.hstack([self.U, W])
        ).payload
        return G[:kb, :b], G[:kb, b:], G[kb:, :b], G[kb:, b:]

    @abstractmethod
    def _first_pass(self) -> None: ...

    @abstractmethod
    def _extend(self, k: int) -> None:
        """Form H_{1:k,k} (or its provisional part) and the next unnormalized block."""

    @abstractmethod
    def _close_pass(self, k: int) -> _Step:
        """Pass k+1: finalize V_{k+1} and H_{k+1,k}."""


class _BMGSCompactWY(_DelayedNormalization):
    """BMGS in compact WY form, T applied by multiplication (CWY) or by solve (ICWY)."""

    solve_t: ClassVar[bool]

    def __init__(self, *args: object, **kwargs: object):
        super().__init__(*args, **kwargs)
        self.T = np.eye((self.m + 1) * self.paradigm.unit)

    def _first_pass(self) -> None:
        P = self.paradigm
        V1 = self._block(0)
        W = self.op.apply(V1)
        count_basis_eval(1)
        h11 = inner_prod(P, V1, W).payload
        self._set_column(1, h11)
        count_basis_eval(1)
        self.U = W - P.apply(V1, h11)

    def _close_pass(self, k: int) -> _Step:
        assert self.U is not None
        P = self.paradigm
        kb = k * P.unit
        W = self.op.apply(self.U)
        Y, Z, omega, Ptil = self._fused_gram(k, W)
        h = self._column(k)
        status, R = self._factor(omega, omega + h.T @ h, k)
        if status is not _Step.DONE:
            return status
        self._set_subdiagonal(k, R)
        YR = P.divide(Y, R)
        Tk = self.T[:kb, :kb]
        self.T[:kb, self._rows(k, k + 1)] = YR if self.solve_t else -Tk @ YR
        self._set_block(k, P.divide(self.U, R))
        self.W, self._Z, self._Ptil, self._R = W, Z, Ptil, R
        return _Step.DONE

    def _extend(self, k: int) -> None:
        assert self.W is not None and self._Z is not None
        assert self._Ptil is not None and self._R is not None
        P = self.paradigm
        kb = k * P.unit
        R = self._R
        ZP = np.vstack([self._Z, P.solve_transposed(R, self._Ptil)])
        rhs = P.divide(ZP, R)
        Tk = self.T[:kb, :kb]
        h = tri_solve(Tk, rhs, side="left", transpose=True) if self.solve_t else Tk.T @ rhs
        self._set_column(k, h)
        count_basis_eval(1)
        self.U = P.divide(self.W, R) - P.apply(self._basis(k), h)


class BMGSCWYArnoldi(_BMGSCompactWY):
    kind = SkeletonKind.BMGS_CWY
    solve_t = False


class BMGSICWYArnoldi(_BMGSCompactWY):
    kind = SkeletonKind.BMGS_ICWY
    solve_t = True


class BCGSIROLSArnoldi(_DelayedNormalization):
    """BCGS with inner reorthogonalization, delayed by one pass (one sync per iteration)."""

    kind = SkeletonKind.BCGS_IRO_LS

    def __init__(self, *args: object, **kwargs: object):
        super().__init__(*args, **kwargs)
        self.J: Optional[Array] = None

    def _first_pass(self) -> None:
        P = self.paradigm
        V1 = self._block(0)
        W = self.op.apply(V1)
        count_basis_eval(1)
        self.J = inner_prod(P, V1, W).payload
        self._set_column(1, self.J)
        count_basis_eval(1)
        self.U = W - P.apply(V1, self.J)

    def _close_pass(self, k: int) -> _Step:
        assert self.U is not None and self.J is not None
        P = self.paradigm
        W = self.op.apply(self.U)
        Y, Z, omega_tilde, Ptil = self._fused_gram(k, W)
        self._set_column(k, self.J + Y)
        status, R = self._factor(
            omega_tilde - Y.T @ Y, omega_tilde + self.J.T @ self.J, k
        )
        if status is not _Step.DONE:
            return status
        self._set_subdiagonal(k, R)
        count_basis_eval(1)
        self._set_block(k, P.divide(self.U - P.apply(self._basis(k), Y), R))
        self.W, self._Y, self._Z, self._Ptil, self._R = W, Y, Z, Ptil, R
        return _Step.DONE

    def _extend(self, k: int) -> None:
        assert self.W is not None and self._Y is not None and self._Z is not None
        assert self._Ptil is not None and self._R is not None
        P = self.paradigm
        kb = k * P.unit
        R, Y, Z = self._R, self._Y, self._Z
        ZP = np.vstack([Z, P.solve_transposed(R, self._Ptil - Y.T @ Z)])
        self.J = P.divide(ZP - self.H[:kb, : (k - 1) * P.unit] @ Y, R)
        count_basis_eval(1)
        self.U = P.divide(self.W - P.apply(self._basis(k), ZP), R)


@dataclass(frozen=True)
class SkeletonInfo:
    """Catalogue entry for one skeleton."""

    kind: SkeletonKind
    implementation: type[Skeleton]
    description: str
    syncs_per_cycle: str
    loo_bound: str
    sync_count: Callable[[int, int], int]  # (iterations k, IO cost) -> syncs of one cycle

    @property
    def name(self) -> str:
        return self.kind.display


SKELETONS: dict[SkeletonKind, SkeletonInfo] = {
    info.kind: info
    for info in (
        SkeletonInfo(
            SkeletonKind.BMGS, BMGSArnoldi,
            "block modified Gram-Schmidt",
            "m(m+1)/2 + (m+1) IO", "O(eps) kappa",
            lambda k, c: k * (k + 1) // 2 + (k + 1) * c,
        ),
        SkeletonInfo(
            SkeletonKind.BCGS_PIP, BCGSPIPArnoldi,
            "block classical Gram-Schmidt, Pythagorean with inner product",
            "m + 1", "O(eps) kappa^2",
            lambda k, c: k + c,
        ),
        SkeletonInfo(
            SkeletonKind.BCGS_PIO, BCGSPIOArnoldi,
            "block classical Gram-Schmidt, Pythagorean with intraorthogonalization",
            "2m + 1", "O(eps) kappa^2",
            lambda k, c: (1 + c) * k + c,
        ),
        SkeletonInfo(
            SkeletonKind.BMGS_SVL, BMGSSVLArnoldi,
            "BMGS with stabilized correction by multiplication",
            "3m", "O(eps) kappa",
            lambda k, c: 2 * k + (k + 1) * c,
        ),
        SkeletonInfo(
            SkeletonKind.BMGS_LTS, BMGSLTSArnoldi,
            "BMGS with lower triangular solve",
            "3m", "O(eps) kappa",
            lambda k, c: 2 * k + (k + 1) * c,
        ),
        SkeletonInfo(
            SkeletonKind.BMGS_CWY, BMGSCWYArnoldi,
            "BMGS in compact WY form",
            "m + 2", "--",
            lambda k, c: k + 1 + c,
        ),
        SkeletonInfo(
            SkeletonKind.BMGS_ICWY, BMGSICWYArnoldi,
            "BMGS in inverse compact WY form",
            "m + 2", "--",
            lambda k, c: k + 1 + c,
        ),
        SkeletonInfo(
            SkeletonKind.BCGS_IRO_LS, BCGSIROLSArnoldi,
            "BCGS with inner reorthogonalization, low-sync",
            "m + 2", "--",
            lambda k, c: k + 1 + c,
        ),
    )
}


def make_skeleton(
    kind: SkeletonKind,
    op: BlockOperator,
    B: Array,
    m: int,
    paradigm: Paradigm,
    muscle: Optional[MuscleKind] = None,
) -> Skeleton:
    return SKELETONS[kind].implementation(op, B, m, paradigm, muscle)


def expected_syncs(
    kind: SkeletonKind, paradigm: Paradigm, muscle: Optional[MuscleKind], cycle_lengths: list[int]
) -> int:
    """
    Sync points of a solve whose cycles completed the given numbers of iterations.

    The IO cost is that of one call on an s-column block, so BCGS-PIO is only
    covered for single-reduce muscles.
    """
    resolved = resolve_muscle(kind, paradigm, muscle)
    cost = muscle_sync_cost(resolved, paradigm.s)
    count = SKELETONS[kind].sync_count
    return sum(count(k, cost) if k else cost for k in cycle_lengths)


def bmgs_qr(paradigm: Paradigm, muscle: MuscleKind, X: Array) -> tuple[Array, Array]:
    """
    Block MGS QR of an n x (p s) panel.

    Returns Q and the dense block upper triangular R with Q R = X. Raises
    ``BreakdownError`` naming the 1-based block whose muscle call failed.
    """
    X = np.asarray(X, dtype=np.float64)
    s, b = paradigm.s, paradigm.unit
    if X.ndim != 2 or X.shape[1] % s:
        raise UsageError("X must have a multiple of s columns")
    p = X.shape[1] // s
    if p * s > X.shape[0]:
        raise UsageError("X has more columns than rows")
    Q = np.zeros_like(X)
    R = np.zeros((p * b, p * b))
    for k in range(p):
        W = X[:, k * s:(k + 1) * s]
        for j in range(k):
            Qj = Q[:, j * s:(j + 1) * s]
            r = inner_prod(paradigm, Qj, W).payload
            W = W - paradigm.apply(Qj, r)
            R[j * b:(j + 1) * b, k * b:(k + 1) * b] = r
        io = intra_ortho(paradigm, muscle, W)
        if io.breakdown:
            raise BreakdownError(f"{muscle.display} broke down on block {k + 1}", block=k + 1)
        Q[:, k * s:(k + 1) * s] = io.Q
        R[k * b:(k + 1) * b, k * b:(k + 1) * b] = io.R
    return Q, paradigm.expand(R)


def bmgs_arnoldi(
    op: BlockOperator, B: Array, m: int, paradigm: Paradigm, muscle: Optional[MuscleKind] = None
) -> ArnoldiOutcome:
    return BMGSArnoldi(op, B, m, paradigm, muscle).run()


def bcgs_pip_arnoldi(
    op: BlockOperator, B: Array, m: int, paradigm: Paradigm, muscle: Optional[MuscleKind] = None
) -> ArnoldiOutcome:
    """``muscle`` is used for the initial block only."""
    return BCGSPIPArnoldi(op, B, m, paradigm, muscle).run()


def bcgs_pio_arnoldi(
    op: BlockOperator, B: Array, m: int, paradigm: Paradigm, muscle: Optional[MuscleKind] = None
) -> ArnoldiOutcome:
    return BCGSPIOArnoldi(op, B, m, paradigm, muscle).run()


def bmgs_svl_lts_arnoldi(
    op: BlockOperator, B: Array, m: int, paradigm: Paradigm, variant: Literal["SVL", "LTS"]
) -> ArnoldiOutcome:
    impl = {"SVL": BMGSSVLArnoldi, "LTS": BMGSLTSArnoldi}.get(variant)
    if impl is None:
        raise UsageError(f"variant must be SVL or LTS, got {variant!r}")
    return impl(op, B, m, paradigm).run()


def bmgs_cwy_icwy_arnoldi(
    op: BlockOperator,
    B: Array,
    m: int,
    paradigm: Paradigm,
    variant: Literal["CWY", "ICWY"],
    muscle: Optional[MuscleKind] = None,
) -> ArnoldiOutcome:
    impl = {"CWY": BMGSCWYArnoldi, "ICWY": BMGSICWYArnoldi}.get(variant)
    if impl is None:
        raise UsageError(f"variant must be CWY or ICWY, got {variant!r}")
    return impl(op, B, m, paradigm, muscle).run()


def bcgs_iro_ls_arnoldi(
    op: BlockOperator, B: Array, m: int, paradigm: Paradigm, muscle: Optional[MuscleKind] = None
) -> ArnoldiOutcome:
    return BCGSIROLSArnoldi(op, B, m, paradigm, muscle).run()
