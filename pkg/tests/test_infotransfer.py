import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_stable
from oracles import mc_conditional_entropy
from infoclust.errors import ConvergenceError, NumericalDomainError
from infoclust.infotransfer import (TransferMatrix, conditional_entropy_term,
                                    frozen_transfer_step, linear_transfer, model_transfer_matrix,
                                    pinned_covariance, steady_state_transfer, transfer_from_data,
                                    transfer_matrix)
from infoclust.simulate import make_three_state, simulate_linear
from infoclust.statespace import (LinearModel, SubspacePartition, schur_complement,
                                  steady_state_covariance)


def exact_frozen(A, frozen):
    Af = np.array(A, dtype=float)
    Af[list(frozen)] = 0.0
    Af[list(frozen), list(frozen)] = 1.0
    return Af


def test_worked_example_value():
    m = make_three_state()
    p = SubspacePartition([0], [2], [1])
    v = steady_state_transfer(m, p, np.eye(3))
    assert v.t == "steady"
    assert abs(v.value - 0.302326) < 1e-5


def test_undriven_target_has_zero_transfer():
    # nothing drives x1 in the three-state system
    m = make_three_state()
    for src in (1, 2):
        p = SubspacePartition.complement(3, [src], [0])
        assert abs(steady_state_transfer(m, p).value) < 1e-12


def test_entropy_term_against_monte_carlo(rng):
    A = random_stable(3, rng, rho=0.7)
    m = LinearModel(A, 0.8)
    S = steady_state_covariance(m)
    x, y = [0, 2], [1]
    exact = conditional_entropy_term(A[np.ix_(y, x)], schur_complement(S, x, y), 0.64)
    n = 200_000
    est = mc_conditional_entropy(A, 0.8, S, y, n, rng)
    assert abs(est - exact) < 4 * math.sqrt(len(y) / (2 * n))


def test_entropy_term_domain():
    with pytest.raises(NumericalDomainError):
        conditional_entropy_term(np.ones((1, 1)), np.ones((1, 1)), 0.0)
    with pytest.raises(NumericalDomainError):
        conditional_entropy_term(np.eye(2), -10 * np.eye(2), 1.0)


def test_exact_operators_reproduce_closed_form(rng):
    for _ in range(5):
        A = random_stable(4, rng)
        m = LinearModel(A, 1.0)
        S = steady_state_covariance(m)
        for p in (SubspacePartition([0], [2, 3], [1]), SubspacePartition([1, 3], [], [0, 2])):
            ref = linear_transfer(m, p, S).value
            got = frozen_transfer_step(A, exact_frozen(A, p.x1), p, S, 1.0)
            assert abs(got - ref) < 1e-12


def test_pinned_covariance():
    S = np.arange(9.0).reshape(3, 3)
    P = pinned_covariance(S, [1])
    assert not P[1].any() and not P[:, 1].any()
    assert P[0, 2] == 2.0 and S[1, 1] == 4.0


def test_nonconvergence_reports_last_iterates():
    m = make_three_state()
    with pytest.raises(ConvergenceError) as exc:
        steady_state_transfer(m, SubspacePartition([0], [2], [1]), max_iter=1)
    assert len(exc.value.last) == 2


def test_unstable_model_rejected():
    m = LinearModel(1.1 * np.eye(2))
    with pytest.raises(ConvergenceError):
        steady_state_transfer(m, SubspacePartition([0], [], [1]))


def test_data_driven_noise_invariance():
    ts = simulate_linear(make_three_state(), steps=1000, seed=0)
    p = SubspacePartition([0], [2], [1])
    a = transfer_from_data(ts, p, lam=0.05).value
    b = transfer_from_data(ts, p, lam=0.05, noise_var=3.0).value
    assert abs(a - b) < 1e-6


def test_data_driven_needs_positive_noise():
    ts = simulate_linear(make_three_state(), steps=100, seed=0)
    with pytest.raises(NumericalDomainError):
        transfer_from_data(ts, SubspacePartition([0], [2], [1]), lam=0.0)


def test_short_series_warns():
    ts = simulate_linear(make_three_state(), steps=2, seed=0)
    with pytest.warns(UserWarning):
        try:
            transfer_from_data(ts, SubspacePartition([0], [2], [1]))
        except Exception:
            pass


def test_transfer_matrix_threads_match_serial():
    ts = simulate_linear(make_three_state(), steps=500, seed=4)
    groups = [("a", (0,)), ("b", (1,)), ("c", (2,))]
    serial = transfer_matrix(ts, groups)
    threaded = transfer_matrix(ts, groups, workers=4)
    assert serial.T.tobytes() == threaded.T.tobytes()
    assert np.all(np.isnan(np.diag(serial.T)))
    # matrix entries agree with the single-pair estimator
    single = transfer_from_data(ts, SubspacePartition([0], [2], [1])).value
    assert abs(serial.T[0, 1] - single) < 1e-6


def test_model_matrix_matches_pairs():
    m = make_three_state()
    tm = model_transfer_matrix(m, [("x1", (0,)), ("x2", (1,)), ("x3", (2,))])
    ref = steady_state_transfer(m, SubspacePartition([1], [0], [2])).value
    assert abs(tm.T[1, 2] - ref) < 1e-7
    assert tm.T[1, 0] == pytest.approx(0.0, abs=1e-12)


def test_transfer_matrix_json_roundtrip():
    tm = model_transfer_matrix(make_three_state(), [("a", (0,)), ("b", (1, 2))])
    back = TransferMatrix.from_json(tm.to_json())
    assert back.groups == tm.groups
    np.testing.assert_array_equal(back.T, tm.T)
    assert back.to_json() == tm.to_json()


def test_group_validation():
    m = make_three_state()
    with pytest.raises(ValueError):
        model_transfer_matrix(m, [("a", (0,)), ("b", (0, 1))])
    with pytest.raises(IndexError):
        model_transfer_matrix(m, [("a", (0,)), ("b", (5,))])


def test_failed_pair_is_annotated():
    # tol=0 can never be met, so every pair fails without aborting the matrix
    tm = model_transfer_matrix(make_three_state(), [("a", (0,)), ("b", (1,))], tol=0.0)
    assert np.all(np.isnan(tm.T))
    assert set(tm.annotations) == {"0,1", "1,0"}
    assert tm.annotations["0,1"].startswith("NONCONVERGENCE")


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.1, 5.0))
def test_steady_transfer_scale_invariant(seed, sigma):
    rng = np.random.default_rng(seed)
    A = random_stable(3, rng, rho=0.6)
    p = SubspacePartition([0], [1], [2])
    a = steady_state_transfer(LinearModel(A, 1.0), p, tol=1e-12).value
    b = steady_state_transfer(LinearModel(A, sigma), p, np.eye(3) * sigma ** 2, tol=1e-12).value
    assert abs(a - b) < 1e-8


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_block_decoupled_zero(seed):
    rng = np.random.default_rng(seed)
    A = np.zeros((4, 4))
    A[:2, :2] = random_stable(2, rng, rho=0.7)
    A[2:, 2:] = random_stable(2, rng, rho=0.7)
    m = LinearModel(A)
    for src, dst in (([0], [2]), ([2, 3], [1]), ([1], [3])):
        v = steady_state_transfer(m, SubspacePartition.complement(4, src, dst)).value
        assert abs(v) < 1e-12
