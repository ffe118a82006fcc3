"""Tests for benchmark problems, Matrix Market I/O and ILU(0)."""

from pathlib import Path

import numpy as np
import pytest

from lowsync_krylov import requirement
from lowsync_krylov.errors import (
    FactorizationError,
    MatrixMarketError,
    SingularFactorError,
    UnsupportedFormatError,
    UsageError,
)
from lowsync_krylov.instrument import Counters, counting
from lowsync_krylov.problems import (
    CSR,
    ILU0Factors,
    PreconditionedOperator,
    direct_solve,
    ilu0,
    lapl_2d,
    laplacian_2d,
    load_problem,
    read_matrix_market,
    tridiag,
    write_matrix_market,
)
from lowsync_krylov.solver import SolverConfig, solve, true_residual_and_error
from lowsync_krylov.types import SkeletonKind, SolveStatus

SYMMETRIC_3x3 = """%%MatrixMarket matrix coordinate real symmetric
% a comment line
3 3 4
1 1 2.0
2 1 -1.0
2 2 2.0
3 3 1.0
"""


def _write(tmp_path: Path, text: str, name: str = "m.mtx") -> Path:
    path = tmp_path / name
    path.write_text(text)
    return path


@requirement("PRB-001", "tridiag(n) has the documented entries and right-hand side")
def test_tridiag_small():
    problem = tridiag(3)
    np.testing.assert_array_equal(
        problem.A.toarray(), [[-1.0, 1.0, 0.0], [1.0, -2.0, 1.0], [0.0, 1.0, -3.0]]
    )
    np.testing.assert_allclose(problem.B[:, 0], np.full(3, 1.0 / np.sqrt(3)))
    np.testing.assert_array_equal(problem.B[:, 1], [1.0, 2.0, 3.0])
    assert (problem.n, problem.s) == (3, 2)
    np.testing.assert_allclose(problem.A @ problem.X_star, problem.B, atol=1e-13)

    with pytest.raises(UsageError):
        tridiag(1)


@requirement("PRB-002", "the 2D Laplacian has the analytic smallest eigenvalue")
def test_laplacian_spectrum():
    A = laplacian_2d(4)
    assert A.shape == (16, 16)
    dense = A.toarray()
    np.testing.assert_array_equal(dense, dense.T)
    assert np.all(np.diag(dense) == 4.0)
    smallest = np.linalg.eigvalsh(dense).min()
    assert smallest == pytest.approx(4.0 - 4.0 * np.cos(np.pi / 5))


@requirement("PRB-003", "lapl_2d right-hand sides are seeded uniform(0, 1)")
def test_lapl_2d_determinism():
    a, b, c = lapl_2d(5, seed=3), lapl_2d(5, seed=3), lapl_2d(5, seed=4)
    assert a.B.shape == (25, 10)
    np.testing.assert_array_equal(a.B, b.B)
    assert not np.array_equal(a.B, c.B)
    assert np.all((a.B >= 0.0) & (a.B < 1.0))
    assert a.rng_seed == 3
    np.testing.assert_allclose(a.A @ a.X_star, a.B, atol=1e-12)


@requirement("PRB-004", "symmetric Matrix Market storage is expanded")
def test_read_symmetric(tmp_path):
    A = read_matrix_market(_write(tmp_path, SYMMETRIC_3x3))
    assert isinstance(A, CSR)
    np.testing.assert_array_equal(
        A.toarray(), [[2.0, -1.0, 0.0], [-1.0, 2.0, 0.0], [0.0, 0.0, 1.0]]
    )


@requirement("PRB-005", "integer fields are read as floating point")
def test_read_integer_general(tmp_path):
    text = "%%MatrixMarket matrix coordinate integer general\n2 2 2\n1 2 3\n2 1 -4\n"
    A = read_matrix_market(_write(tmp_path, text))
    assert A.dtype == np.float64
    np.testing.assert_array_equal(A.toarray(), [[0.0, 3.0], [-4.0, 0.0]])


@requirement("PRB-006", "malformed and unsupported Matrix Market files are rejected")
@pytest.mark.parametrize(
    ("text", "error", "line"),
    [
        ("3 3 1\n1 1 1.0\n", MatrixMarketError, 1),
        ("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n", UnsupportedFormatError, 1),
        ("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n",
         UnsupportedFormatError, 1),
        ("%%MatrixMarket matrix coordinate pattern general\n1 1 1\n1 1\n",
         UnsupportedFormatError, 1),
        ("%%MatrixMarket matrix coordinate real skew-symmetric\n2 2 1\n2 1 1.0\n",
         UnsupportedFormatError, 1),
        ("%%MatrixMarket matrix coordinate real general\n%\nthree by three\n",
         MatrixMarketError, 3),
    ],
    ids=["no-banner", "array", "complex", "pattern", "skew", "size-line"],
)
def test_read_errors(tmp_path, text, error, line):
    with pytest.raises(error) as info:
        read_matrix_market(_write(tmp_path, text))
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


@requirement("PRB-007", "written matrices read back bit for bit")
def test_matrix_market_round_trip(tmp_path, rng):
    A = CSR(np.where(rng.random((8, 8)) < 0.3, rng.standard_normal((8, 8)), 0.0))
    path = tmp_path / "round.mtx"
    write_matrix_market(path, A, comment="random test matrix")
    B = read_matrix_market(path)
    np.testing.assert_array_equal(B.toarray(), A.toarray())


@requirement("PRB-008", "ILU(0) of a tridiagonal matrix is its exact LU factorization")
def test_ilu0_exact_on_tridiagonal():
    A = -tridiag(30).A
    factors = ilu0(A)
    np.testing.assert_allclose((factors.L @ factors.U).toarray(), A.toarray(), atol=1e-12)
    np.testing.assert_array_equal(factors.L.diagonal(), np.ones(30))


@requirement("PRB-009", "ILU(0) of an upper triangular matrix has L = I")
def test_ilu0_upper_triangular(rng):
    dense = np.triu(rng.standard_normal((6, 6))) + 4.0 * np.eye(6)
    factors = ilu0(CSR(dense))
    np.testing.assert_array_equal(factors.L.toarray(), np.eye(6))
    np.testing.assert_allclose(factors.U.toarray(), dense)


@requirement("PRB-010", "ILU(0) keeps the pattern of A and matches it on the pattern")
def test_ilu0_pattern():
    A = laplacian_2d(5)
    factors = ilu0(A)
    pattern = A.toarray() != 0.0
    L, U = factors.L.toarray(), factors.U.toarray()
    assert not np.any((L != 0.0) & ~pattern)
    assert not np.any((U != 0.0) & ~pattern)
    np.testing.assert_allclose((L @ U)[pattern], A.toarray()[pattern], atol=1e-12)


@requirement("PRB-011", "ILU(0) reports a missing diagonal entry")
def test_ilu0_missing_diagonal():
    with pytest.raises(FactorizationError):
        ilu0(CSR(np.array([[0.0, 1.0], [1.0, 1.0]])))
    with pytest.raises(UsageError):
        ilu0(CSR(np.ones((2, 3))))


@requirement("PRB-012", "the preconditioned operator applies U^-1 L^-1 A with one matvec")
def test_preconditioned_operator(rng):
    problem = lapl_2d(4, s=2, seed=1)
    factors = ilu0(problem.A)
    op = PreconditionedOperator(problem.A, factors)
    X = rng.standard_normal((16, 2))
    M = (factors.L @ factors.U).toarray()

    counters = Counters()
    with counting(counters):
        Y = op.apply(X)
    assert counters.matvec == 1
    np.testing.assert_allclose(M @ Y, problem.A @ X, atol=1e-12)

    problem.precond = factors
    op2, rhs = problem.system()
    assert isinstance(op2, PreconditionedOperator)
    np.testing.assert_allclose(M @ rhs, problem.B, atol=1e-12)


@requirement("PRB-013", "direct_solve raises on a singular matrix")
def test_direct_solve_singular():
    with pytest.raises(SingularFactorError):
        direct_solve(CSR(np.ones((2, 2))), np.ones((2, 1)))


@requirement("PRB-014", "file-backed problems get seeded right-hand sides and ground truth")
def test_load_problem(tmp_path):
    path = tmp_path / "tri20.mtx"
    write_matrix_market(path, tridiag(20).A)

    problem = load_problem(path, s=3, seed=7)
    assert problem.name == "tri20"
    assert problem.B.shape == (20, 3)
    assert problem.precond is None
    np.testing.assert_allclose(problem.A @ problem.X_star, problem.B, atol=1e-12)
    np.testing.assert_array_equal(problem.B, load_problem(path, s=3, seed=7).B)

    assert load_problem(path, s=2, preconditioner="ilu0", name="pre").precond is not None
    with pytest.raises(UsageError):
        load_problem(path, s=2, preconditioner="jacobi")


@requirement("PRB-015", "ILU(0)-preconditioned problems solve end to end")
@pytest.mark.parametrize(
    "kind", [SkeletonKind.BMGS, SkeletonKind.BCGS_PIP, SkeletonKind.BMGS_CWY],
    ids=lambda k: k.value,
)
def test_preconditioned_solve(kind):
    problem = lapl_2d(6, s=2, seed=3)
    problem.precond = ilu0(problem.A)
    for M in (problem.precond.L, problem.precond.U):
        assert M.indices.dtype == np.intc
        assert M.indptr.dtype == np.intc

    op, rhs = problem.system()
    result = solve(op, rhs, SolverConfig(skeleton=kind, m=10, tol=1e-10), problem.X_star)
    assert result.status is SolveStatus.CONVERGED
    _, relerr = true_residual_and_error(problem.A, problem.B, result.X, problem.X_star)
    assert relerr is not None and relerr <= 1e-8


@requirement("PRB-016", "ILU(0) factors built elsewhere are accepted whatever their index type")
def test_ilu0_factors_index_type():
    dense = np.array([[4.0, 1.0, 0.0], [1.0, 4.0, 1.0], [0.0, 1.0, 4.0]])
    L = CSR(np.tril(dense / 4.0, -1) + np.eye(3))
    U = CSR(np.triu(dense))
    L.indices, L.indptr = L.indices.astype(np.int64), L.indptr.astype(np.int64)
    factors = ILU0Factors(L=L, U=U)
    assert factors.L.indices.dtype == np.intc
    Y = factors.solve(np.ones((3, 1)))
    np.testing.assert_allclose(L.toarray() @ U.toarray() @ Y, np.ones((3, 1)), atol=1e-14)
