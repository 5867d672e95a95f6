import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from acls.errors import InvalidArgumentError, SingularSystemError
from acls.numerics import inverse_spd, solve_least_squares, thin_svd


def test_least_squares_examples():
    np.testing.assert_allclose(solve_least_squares(np.array([[1.0], [2.0]]), np.array([2.0, 4.0])), [2.0])
    np.testing.assert_allclose(solve_least_squares(np.eye(3), np.array([1.0, 2.0, 3.0])), [1, 2, 3])


def test_least_squares_normal_equations(rng):
    A = rng.standard_normal((20, 4))
    b = rng.standard_normal(20)
    beta = solve_least_squares(A, b)
    assert np.max(np.abs(A.T @ (A @ beta - b))) <= 1e-8


def test_least_squares_rank_deficient():
    A = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
    with pytest.raises(SingularSystemError) as info:
        solve_least_squares(A, np.ones(3))
    assert info.value.rank == 1


def test_svd_diagonal():
    L, D, R = thin_svd(np.diag([3.0, 1.0]))
    np.testing.assert_allclose(D, [3.0, 1.0])
    np.testing.assert_allclose(np.abs(L), np.eye(2), atol=1e-14)
    np.testing.assert_allclose(np.abs(R), np.eye(2), atol=1e-14)


def test_svd_rank_one():
    u = np.array([1.0, 2.0, 2.0])
    v = np.array([3.0, 4.0])
    L, D, R = thin_svd(np.outer(u, v))
    np.testing.assert_allclose(D, [15.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(L.T @ L, np.eye(2), atol=1e-12)
    np.testing.assert_allclose(L @ np.diag(D) @ R.T, np.outer(u, v), atol=1e-12)


@pytest.mark.parametrize("shape", [(10, 6), (6, 10), (5, 5), (40, 3)])
def test_svd_reconstruction_and_orthonormality(rng, shape):
    A = rng.standard_normal(shape)
    L, D, R = thin_svd(A)
    k = min(shape)
    assert L.shape == (shape[0], k) and R.shape == (shape[1], k) and D.shape == (k,)
    assert np.max(np.abs(L @ np.diag(D) @ R.T - A)) <= 1e-10
    np.testing.assert_allclose(L.T @ L, np.eye(k), atol=1e-12)
    np.testing.assert_allclose(R.T @ R, np.eye(k), atol=1e-12)
    assert np.all(np.diff(D) <= 0)
    np.testing.assert_allclose(D, np.linalg.svd(A, compute_uv=False), rtol=1e-12)


def test_svd_sign_convention(rng):
    L, _, _ = thin_svd(rng.standard_normal((8, 4)))
    for j in range(4):
        col = L[:, j]
        assert col[np.flatnonzero(np.abs(col) > 1e-12)[0]] > 0


def test_svd_zero_matrix():
    L, D, R = thin_svd(np.zeros((4, 2)))
    np.testing.assert_array_equal(D, 0.0)
    np.testing.assert_allclose(L.T @ L, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(R.T @ R, np.eye(2), atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 7), st.integers(1, 7)), elements=st.floats(-10, 10)))
def test_svd_property_reconstruction(A):
    L, D, R = thin_svd(A)
    assert np.max(np.abs(L @ np.diag(D) @ R.T - A), initial=0.0) <= 1e-9
    k = min(A.shape)
    np.testing.assert_allclose(L.T @ L, np.eye(k), atol=1e-9)


def test_inverse_spd_examples(rng):
    np.testing.assert_allclose(inverse_spd(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(inverse_spd(np.diag([2.0, 4.0])), np.diag([0.5, 0.25]))
    B = rng.standard_normal((6, 5))
    A = B.T @ B + np.eye(5)
    np.testing.assert_allclose(inverse_spd(A) @ A, np.eye(5), atol=1e-10)


def test_inverse_spd_errors():
    with pytest.raises(InvalidArgumentError):
        inverse_spd(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(SingularSystemError):
        inverse_spd(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(SingularSystemError):
        inverse_spd(-np.eye(2))
