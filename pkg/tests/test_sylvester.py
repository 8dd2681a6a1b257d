import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multisssa.errors import DimensionMismatch, NonFinite, NotPositiveDefinite, NotSquare
from multisssa.sylvester import precompute_factors, solve_sylvester, sym_eig

from oracles import chain_P, kron_sylvester


def _spd(rng, n, shift=0.5):
    A = rng.standard_normal((n, n))
    return A @ A.T + shift * np.eye(n)


def test_sym_eig_diagonal():
    e = sym_eig(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_allclose(e.d, [1.0, 2.0, 3.0])


def test_sym_eig_reconstructs():
    S = _spd(np.random.default_rng(0), 6)
    e = sym_eig(S)
    np.testing.assert_allclose(e.Q @ np.diag(e.d) @ e.Q.T, S, atol=1e-12)
    np.testing.assert_allclose(e.Q.T @ e.Q, np.eye(6), atol=1e-12)


def test_sym_eig_errors():
    with pytest.raises(NotSquare):
        sym_eig(np.zeros((2, 3)))
    with pytest.raises(NonFinite):
        sym_eig(np.array([[np.nan]]))


def test_scalar_case():
    f = precompute_factors(np.array([[2.0]]), np.array([[3.0]]))
    np.testing.assert_allclose(solve_sylvester(f, np.array([[10.0]])), [[2.0]])


def test_identity_case():
    f = precompute_factors(np.eye(3), np.zeros((4, 4)))
    M = np.arange(12.0).reshape(3, 4)
    np.testing.assert_allclose(solve_sylvester(f, M), M, atol=1e-14)


def test_rejects_indefinite_W():
    with pytest.raises(NotPositiveDefinite):
        precompute_factors(np.diag([1.0, 0.0]), np.eye(2))


def test_rejects_negative_Z():
    with pytest.raises(NotPositiveDefinite):
        precompute_factors(np.eye(2), -np.eye(2))


def test_shape_mismatch():
    f = precompute_factors(np.eye(2), np.eye(3))
    with pytest.raises(DimensionMismatch):
        solve_sylvester(f, np.zeros((3, 2)))


@given(N=st.integers(1, 8), T=st.integers(2, 9), seed=st.integers(0, 2**32 - 1),
       mu2=st.floats(0.01, 10))
@settings(max_examples=60, deadline=None)
def test_matches_kronecker_and_residual(N, T, seed, mu2):
    rng = np.random.default_rng(seed)
    W = _spd(rng, N)
    P = chain_P(T)
    Z = mu2 * P @ P.T
    M = rng.standard_normal((N, T))
    X = solve_sylvester(precompute_factors(W, Z), M)
    ref = kron_sylvester(W, Z, M)
    assert np.max(np.abs(X - ref)) <= 1e-8 * max(1.0, np.max(np.abs(ref)))
    assert np.linalg.norm(W @ X + X @ Z - M) <= 1e-9 * max(1.0, np.linalg.norm(M))
