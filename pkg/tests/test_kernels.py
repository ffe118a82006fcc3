"""Tests for the dense and sparse kernels."""

import numpy as np
import pytest
import scipy.sparse

from lowsync_krylov import requirement
from lowsync_krylov.errors import SingularFactorError, UsageError
from lowsync_krylov.instrument import Counters, counting
from lowsync_krylov.kernels import (
    SparseOperator,
    as_operator,
    cholesky_flagged,
    condition_number,
    qr_pos,
    spectral_norm,
    spmv_block,
    tri_solve,
)


@requirement("KRN-001", "cholesky_flagged returns the upper factor of an SPD matrix")
def test_cholesky_identity_and_known_factor():
    out = cholesky_flagged(np.eye(2))
    assert not out.breakdown
    np.testing.assert_allclose(out.factor, np.eye(2))

    out = cholesky_flagged(np.array([[4.0, 2.0], [2.0, 5.0]]))
    assert not out.breakdown
    np.testing.assert_allclose(out.factor, [[2.0, 1.0], [0.0, 2.0]], atol=1e-15)
    np.testing.assert_allclose(out.factor.T @ out.factor, [[4.0, 2.0], [2.0, 5.0]])


@requirement("KRN-002", "cholesky_flagged raises the NaN-flag on indefinite input")
def test_cholesky_indefinite_sets_flag():
    out = cholesky_flagged(np.array([[1.0, 2.0], [2.0, 1.0]]))
    assert out.breakdown


@requirement("KRN-003", "cholesky_flagged flags non-finite input instead of raising")
def test_cholesky_nonfinite_sets_flag():
    S = np.eye(3)
    S[1, 2] = np.nan
    assert cholesky_flagged(S).breakdown


@requirement("KRN-004", "cholesky_flagged rejects non-square input")
def test_cholesky_non_square_is_usage_error():
    with pytest.raises(UsageError):
        cholesky_flagged(np.ones((2, 3)))


@requirement("KRN-005", "cholesky_flagged symmetrizes slightly asymmetric input")
def test_cholesky_symmetrizes(rng):
    X = rng.standard_normal((6, 4))
    S = X.T @ X
    S[0, 1] += 1e-15
    out = cholesky_flagged(S)
    assert not out.breakdown
    residual = np.linalg.norm(out.factor.T @ out.factor - 0.5 * (S + S.T))
    assert residual <= 1e-13 * np.linalg.norm(S)


@requirement("KRN-006", "qr_pos gives orthonormal Q and R with nonnegative diagonal")
def test_qr_pos_examples(rng):
    Q, R = qr_pos(np.array([[3.0], [4.0]]))
    np.testing.assert_allclose(Q, [[0.6], [0.8]])
    np.testing.assert_allclose(R, [[5.0]])

    X = np.vstack([np.eye(3), np.zeros((2, 3))])
    Q, R = qr_pos(X)
    np.testing.assert_allclose(Q, X, atol=1e-15)
    np.testing.assert_allclose(R, np.eye(3), atol=1e-15)

    X = rng.standard_normal((10, 3))
    Q, R = qr_pos(X)
    assert np.linalg.norm(Q.T @ Q - np.eye(3)) <= 1e-14
    assert np.linalg.norm(Q @ R - X) <= 1e-14 * np.linalg.norm(X)
    assert np.all(np.diag(R) >= 0.0)


@requirement("KRN-007", "qr_pos rejects n < s")
def test_qr_pos_wide_is_usage_error():
    with pytest.raises(UsageError):
        qr_pos(np.ones((2, 3)))


@requirement("KRN-008", "tri_solve handles both sides, orientations and transposes")
def test_tri_solve_cases(rng):
    B = rng.standard_normal((3, 2))
    np.testing.assert_allclose(tri_solve(np.eye(3), B), B)

    T = np.array([[2.0, 1.0], [0.0, 2.0]])
    np.testing.assert_allclose(tri_solve(T, np.array([[4.0], [2.0]])), [[1.5], [1.0]])

    L = np.tril(rng.standard_normal((3, 3))) + 3.0 * np.eye(3)
    X = tri_solve(L, B, transpose=True)
    assert np.linalg.norm(L.T @ X - B) <= 1e-14 * np.linalg.norm(B) * np.linalg.cond(L)

    R = np.triu(rng.standard_normal((2, 2))) + 3.0 * np.eye(2)
    C = rng.standard_normal((5, 2))
    X = tri_solve(R, C, side="right")
    np.testing.assert_allclose(X @ R, C, atol=1e-13)


@requirement("KRN-009", "tri_solve raises on a zero diagonal entry")
def test_tri_solve_singular():
    with pytest.raises(SingularFactorError):
        tri_solve(np.array([[1.0, 2.0], [0.0, 0.0]]), np.ones((2, 1)))


@requirement("KRN-010", "condition_number is sigma_max / sigma_min")
def test_condition_number():
    assert condition_number(np.eye(4)) == pytest.approx(1.0)
    assert condition_number(np.diag([10.0, 1.0])) == pytest.approx(10.0)
    assert condition_number(np.array([[1.0, 0.0], [0.0, 0.0]])) == float("inf")
    with pytest.raises(UsageError):
        condition_number(np.zeros((0, 0)))


@requirement("KRN-011", "spectral_norm is the largest singular value")
def test_spectral_norm():
    assert spectral_norm(np.diag([3.0, -7.0, 1.0])) == pytest.approx(7.0)


@requirement("KRN-012", "spmv_block counts one matvec per block application")
def test_spmv_counts_matvec(rng):
    A = scipy.sparse.random_array((20, 20), density=0.2, random_state=1, format="csr")
    X = rng.standard_normal((20, 3))
    counters = Counters()
    with counting(counters):
        Y = spmv_block(A, X)
        SparseOperator(A).apply(X)
    np.testing.assert_allclose(Y, A @ X)
    assert counters.matvec == 2
    assert counters.sync == 0


@requirement("KRN-013", "as_operator wraps matrices and rejects other objects")
def test_as_operator():
    op = as_operator(np.eye(3))
    assert op.shape == (3, 3)
    with pytest.raises(UsageError):
        as_operator("not a matrix")
    with pytest.raises(UsageError):
        SparseOperator(np.ones((2, 3)))
