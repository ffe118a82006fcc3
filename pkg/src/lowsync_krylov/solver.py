"""
Restarted block FOM/GMRES on top of the Arnoldi skeletons.

A cycle solves the projected system (H_k + M E_k^T) Xi = E_1 beta after every
iteration. The residual of the cycle is V_{k+1} U_gen c with the cospatial factor
c = E_k^T Xi, so the next cycle restarts from U = V_{k+1} U_gen and the residual
norm is tracked through the accumulated product of cospatial factors.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .arnoldi import SKELETONS, make_skeleton
from .errors import SolverBreakdownError, UsageError
from .instrument import ConvergenceRecord, Counters, counting, suspended
from .kernels import BlockOperator, as_operator, condition_number, frobenius_norm, spectral_norm
from .paradigm import Paradigm, inner_prod, resolve_muscle
from .types import (
    Array,
    ArnoldiOutcome,
    BlockHessenberg,
    CycleResult,
    DiagnosticsLevel,
    KrylovBasis,
    ModificationKind,
    MuscleKind,
    ParadigmKind,
    SkeletonKind,
    SolveStatus,
)

logger = logging.getLogger(__name__)


class SolverConfig(BaseModel):
    """One solver configuration, written ip-skel∘(musc)-modification."""

    model_config = ConfigDict(frozen=True)

    skeleton: SkeletonKind = SkeletonKind.BMGS
    paradigm: ParadigmKind = ParadigmKind.CLASSICAL
    muscle: Optional[MuscleKind] = None
    modification: ModificationKind = ModificationKind.NONE
    m: int = Field(ge=1)
    tol: float = Field(gt=0)
    max_cycles: int = Field(default=50, ge=1)
    diagnostics: DiagnosticsLevel = DiagnosticsLevel.NONE

    @model_validator(mode="after")
    def _check_legal(self) -> "SolverConfig":
        # legality does not depend on the block width
        resolve_muscle(self.skeleton, Paradigm(self.paradigm, 1), self.muscle)
        return self

    @property
    def resolved_muscle(self) -> MuscleKind:
        return resolve_muscle(self.skeleton, Paradigm(self.paradigm, 1), self.muscle)

    @property
    def label(self) -> str:
        head = f"{self.paradigm.prefix}-{self.skeleton.display}"
        if self.paradigm is ParadigmKind.CLASSICAL:
            head += f"∘{self.resolved_muscle.display}"
        return f"{head}-{self.modification.display}"

    @property
    def slug(self) -> str:
        """File-name safe label."""
        parts = [self.paradigm.prefix, self.skeleton.value]
        if self.paradigm is ParadigmKind.CLASSICAL:
            parts.append(self.resolved_muscle.value)
        parts.append(self.modification.display.lower())
        return "-".join(parts)


@dataclass
class SolveResult:
    """Outcome of a restarted solve."""

    X: Array
    status: SolveStatus
    cycles: int
    iterations: int
    counters: Counters
    history: list[ConvergenceRecord] = field(default_factory=list)
    cycle_lengths: list[int] = field(default_factory=list)
    relres_est: float = float("nan")
    m_final: int = 0


def harmonic_modification(H: BlockHessenberg) -> Array:
    """Generator M of the harmonic modification: H_k^T M = E_k H_{k+1,k}^T H_{k+1,k}."""
    k, b = H.m_blocks, H.unit
    if k < 1:
        raise UsageError("harmonic modification needs at least one block column")
    sub = H.subdiagonal
    rhs = np.zeros((k * b, b))
    rhs[-b:] = sub.T @ sub
    if not np.any(rhs):
        return rhs
    return _solve_projected(H.principal.T, rhs)


def _solve_projected(A: Array, rhs: Array) -> Array:
    try:
        out = scipy.linalg.solve(A, rhs, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise SolverBreakdownError(f"projected matrix is singular: {e}") from e
    if not np.all(np.isfinite(out)):
        raise SolverBreakdownError("projected solve produced non-finite values")
    return out


def bfom_cycle(
    outcome: ArnoldiOutcome,
    modification: ModificationKind,
    rhs_factor: Array,
    C_accum: Array,
) -> CycleResult:
    """Projected solve and residual estimate of a cycle truncated to its completed iterations."""
    k = outcome.completed
    if k < 1:
        raise UsageError("bfom_cycle needs at least one completed iteration")
    H = outcome.H
    b = H.unit
    paradigm = Paradigm(outcome.paradigm, outcome.basis.s)

    if modification is ModificationKind.HARMONIC:
        M = harmonic_modification(H)
    else:
        M = np.zeros((k * b, b))
    projected = np.array(H.principal, copy=True)
    projected[:, -b:] += M

    E1 = np.zeros((k * b, b))
    E1[:b] = rhs_factor
    Xi = _solve_projected(projected, E1)
    cospatial = Xi[-b:]
    U_gen = np.vstack([M, -H.subdiagonal])
    return CycleResult(
        k=k,
        Xi=Xi,
        cospatial=cospatial,
        U_gen=U_gen,
        res_est=paradigm.norm(U_gen @ cospatial @ C_accum),
    )


def loss_of_orthogonality(paradigm: Paradigm, basis: KrylovBasis) -> float:
    """||I - <V, V>_S||_2 with the block Gram matrix assembled densely."""
    with suspended():
        G = inner_prod(paradigm, basis.panel, basis.panel).to_dense()
    return spectral_norm(np.eye(G.shape[0]) - G)


def true_residual_and_error(
    A_op: BlockOperator, B: Array, X: Array, X_star: Optional[Array] = None
) -> tuple[float, Optional[float]]:
    """Explicit relative residual and, given a reference solution, relative error."""
    with suspended():
        AX = as_operator(A_op).apply(X)
    relres = frobenius_norm(B - AX) / frobenius_norm(B)
    if X_star is None:
        return relres, None
    return relres, frobenius_norm(X - X_star) / frobenius_norm(X_star)


class _Diagnostics:
    """Stability diagnostics of the current cycle; never touches the counters."""

    def __init__(
        self, op: BlockOperator, paradigm: Paradigm, level: DiagnosticsLevel,
        X_star: Optional[Array],
    ):
        self.op = op
        self.paradigm = paradigm
        self.level = level
        self.X_star = X_star
        self._rhs: Optional[Array] = None
        self._AV: list[Array] = []

    def begin_cycle(self, rhs: Array) -> None:
        self._rhs = rhs
        self._AV = []

    def fill(
        self,
        record: ConvergenceRecord,
        basis: KrylovBasis,
        result: CycleResult,
        invariant: bool,
        X: Array,
        C_accum: Array,
    ) -> None:
        assert self._rhs is not None
        P, k = self.paradigm, result.k
        with suspended():
            while len(self._AV) < k:
                self._AV.append(self.op.apply(basis.block(len(self._AV))))
            record.kappa = condition_number(np.hstack([self._rhs, *self._AV[:k]]))
            blocks = k if invariant else k + 1
            record.loo = loss_of_orthogonality(
                P, KrylovBasis(basis.n, basis.s, blocks, basis.leading(blocks))
            )
            if self.X_star is not None:
                X_k = X + P.apply(basis.leading(k), result.Xi @ C_accum)
                record.relerr = frobenius_norm(X_k - self.X_star) / frobenius_norm(self.X_star)


def solve(
    A_op: BlockOperator,
    B: Array,
    config: SolverConfig,
    X_star: Optional[Array] = None,
) -> SolveResult:
    """
    Adaptively restarted block FOM/GMRES.

    Convergence is tested after every iteration. A NaN-flag (or a singular projected
    matrix) at iteration j ends the cycle with the j-1 safe iterations and caps m at
    j-1 for every later cycle; a cycle without a single safe iteration ends the solve
    with status ``dead``.
    """
    op = as_operator(A_op)
    B = np.asarray(B, dtype=np.float64)
    if B.ndim != 2 or op.shape[0] != B.shape[0]:
        raise UsageError(f"B of shape {B.shape} does not match operator {op.shape}")
    n, s = B.shape
    paradigm = Paradigm(config.paradigm, s)
    muscle = resolve_muscle(config.skeleton, paradigm, config.muscle)
    b_norm = frobenius_norm(B)
    if b_norm == 0.0:
        raise UsageError("B must be nonzero")

    X = np.zeros_like(B)
    C_accum = paradigm.identity(1)
    m = config.m
    counters = Counters()
    history: list[ConvergenceRecord] = []
    cycle_lengths: list[int] = []
    iterations = 0
    relres = float("nan")
    status = SolveStatus.MAX_CYCLES_EXHAUSTED
    diagnostics = _Diagnostics(op, paradigm, config.diagnostics, X_star)
    rhs = B
    cycle = 0

    with counting(counters):
        for cycle in range(1, config.max_cycles + 1):
            skeleton = make_skeleton(config.skeleton, op, rhs, m, paradigm, muscle)
            diagnostics.begin_cycle(rhs)
            last = None
            flagged = False
            converged = False

            for k in skeleton.steps():
                try:
                    result = bfom_cycle(
                        skeleton.outcome(), config.modification, skeleton.B_factor, C_accum
                    )
                except SolverBreakdownError as e:
                    logger.debug("cycle %d: %s at iteration %d", cycle, e, k)
                    counters.retract(skeleton.last_step)
                    flagged = True
                    break
                last = result
                iterations += 1
                relres = result.res_est / b_norm
                record = ConvergenceRecord(cycle=cycle, iteration=iterations, relres_est=relres)
                if config.diagnostics is DiagnosticsLevel.PER_ITERATION:
                    diagnostics.fill(
                        record, skeleton.outcome().basis, result, skeleton.invariant, X, C_accum
                    )
                history.append(record)
                if relres <= config.tol:
                    converged = True
                    break

            flagged = flagged or skeleton.breakdown_at is not None
            k_safe = last.k if last is not None else 0
            cycle_lengths.append(k_safe)
            outcome = skeleton.outcome()

            if last is not None and config.diagnostics is DiagnosticsLevel.PER_CYCLE:
                diagnostics.fill(
                    history[-1], outcome.basis, last,
                    skeleton.invariant and k_safe == outcome.completed, X, C_accum,
                )

            if k_safe == 0:
                status = SolveStatus.DEAD
                logger.info("%s: no safe iteration in cycle %d", config.label, cycle)
                break

            X = X + paradigm.apply(outcome.basis.leading(k_safe), last.Xi @ C_accum)
            if converged:
                status = SolveStatus.CONVERGED
                break

            if flagged and k_safe < m:
                logger.info(
                    "%s: NaN-flag in cycle %d, reducing m from %d to %d",
                    config.label, cycle, m, k_safe,
                )
                m = k_safe
            rhs = paradigm.apply(outcome.basis.leading(k_safe + 1), last.U_gen)
            C_accum = last.cospatial @ C_accum
            logger.debug(
                "%s: cycle %d done after %d iterations, relres_est=%.3e",
                config.label, cycle, k_safe, relres,
            )

    logger.info(
        "%s: %s after %d cycles, %d iterations", config.label, status.value, cycle, iterations
    )
    return SolveResult(
        X=X,
        status=status,
        cycles=cycle,
        iterations=iterations,
        counters=counters,
        history=history,
        cycle_lengths=cycle_lengths,
        relres_est=relres,
        m_final=m,
    )


__all__ = [
    "SKELETONS",
    "SolveResult",
    "SolverConfig",
    "bfom_cycle",
    "harmonic_modification",
    "loss_of_orthogonality",
    "solve",
    "true_residual_and_error",
]
