import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import solve_discrete_lyapunov

from conftest import random_spd, random_stable
from infoclust.errors import ConvergenceError, SingularBlockError
from infoclust.statespace import (BlockView, LinearModel, SubspacePartition, check_covariance,
                                  covariance_step, partition_blocks, schur_complement,
                                  steady_state_covariance)


def test_model_validation():
    with pytest.raises(ValueError):
        LinearModel(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        LinearModel(np.eye(2), sigma=0.0)
    with pytest.raises(ValueError):
        LinearModel(np.eye(2), names=("a",))
    m = LinearModel(np.eye(2) * 0.5)
    assert m.names == ("z0", "z1")
    with pytest.raises(ValueError):
        m.A[0, 0] = 1.0  # read-only


def test_partition_validation():
    with pytest.raises(ValueError):
        SubspacePartition([], [1], [2])
    with pytest.raises(ValueError):
        SubspacePartition([0], [1], [1])
    with pytest.raises(IndexError):
        SubspacePartition([-1], [], [2])
    p = SubspacePartition.complement(5, [3], [0, 1])
    assert p.x2 == (2, 4)
    with pytest.raises(IndexError):
        p.check(4)


def test_block_view_reassembles_permuted_matrix(rng):
    A = rng.standard_normal((5, 5))
    p = SubspacePartition([3], [0, 4], [1, 2])
    view = partition_blocks(A, p)
    order = p.order()
    np.testing.assert_array_equal(view.assemble(), A[np.ix_(order, order)])
    np.testing.assert_array_equal(view["y", "x"], A[np.ix_([1, 2], [3, 0, 4])])
    with pytest.raises(KeyError):
        BlockView(A, p)["z", "y"]


def test_schur_matches_block_inverse(rng):
    # inverse of the kept block of S^-1 equals the Schur complement
    S = random_spd(5, rng)
    keep, cond = [0, 3], [1, 2, 4]
    ref = np.linalg.inv(np.linalg.inv(S)[np.ix_(keep, keep)])
    np.testing.assert_allclose(schur_complement(S, keep, cond), ref, rtol=1e-10)


def test_schur_empty_condition_returns_block(rng):
    S = random_spd(3, rng)
    np.testing.assert_allclose(schur_complement(S, [0, 2], []), S[np.ix_([0, 2], [0, 2])])


def test_schur_singular_block_named():
    S = np.ones((3, 3))
    with pytest.raises(SingularBlockError) as exc:
        schur_complement(S, [0], [1, 2], name="Sigma_y")
    assert exc.value.block == "Sigma_y"
    assert "Sigma_y" in str(exc.value)


def test_check_covariance_rejects():
    with pytest.raises(ValueError):
        check_covariance([[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(ValueError):
        check_covariance([[1.0, 0.0], [0.0, -1.0]])


def test_steady_state_matches_lyapunov(rng):
    for n in (2, 3, 5):
        A = random_stable(n, rng)
        m = LinearModel(A, sigma=0.7)
        S = steady_state_covariance(m, tol=1e-12)
        ref = solve_discrete_lyapunov(A, 0.49 * np.eye(n))
        np.testing.assert_allclose(S, ref, rtol=1e-9, atol=1e-10)
        np.testing.assert_allclose(covariance_step(m, S), S, atol=1e-10)


def test_steady_state_unstable_raises():
    with pytest.raises(ConvergenceError):
        steady_state_covariance(LinearModel(np.eye(2)))


def test_steady_state_budget_exhausted():
    with pytest.raises(ConvergenceError) as exc:
        steady_state_covariance(LinearModel(0.99 * np.eye(2)), max_iter=5)
    assert exc.value.residual > 0


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 4), st.integers(0, 10_000))
def test_covariance_step_preserves_psd(n, seed):
    rng = np.random.default_rng(seed)
    m = LinearModel(rng.standard_normal((n, n)), sigma=0.3)
    B = rng.standard_normal((n, n))
    S = covariance_step(m, B @ B.T)
    np.testing.assert_array_equal(S, S.T)
    assert np.linalg.eigvalsh(S).min() >= 0.09 * (1 - 1e-9)
