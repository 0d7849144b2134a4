import numpy as np
import pytest

from oracles import qp_oracle

from ggmdiff.core import SolverConfig
from ggmdiff.errors import DimensionMismatch, NonPsdCost
from ggmdiff.qp import (BoxConstrainedQp, QpHandle, STATUS_INFEASIBLE,
                        STATUS_OPTIMAL, solve_qp)


def spd(rng, d):
    A = rng.normal(size=(d, d))
    return A @ A.T / d + 0.3 * np.eye(d)


def test_equality_pinned_solution():
    prob = BoxConstrainedQp(Q=np.eye(3), A=np.eye(3),
                            lower=np.array([1.0, 0.0, 0.0]),
                            upper=np.array([1.0, 0.0, 0.0]))
    sol = solve_qp(prob)
    assert sol.status == STATUS_OPTIMAL
    assert np.abs(sol.x - [1, 0, 0]).max() < 1e-6


def test_halfspace_projection():
    prob = BoxConstrainedQp(Q=np.eye(2), A=np.array([[1.0, 1.0]]),
                            lower=np.array([1.0]), upper=np.array([np.inf]))
    sol = solve_qp(prob)
    assert np.abs(sol.x - [0.5, 0.5]).max() < 1e-6


def test_unconstrained_minimum():
    prob = BoxConstrainedQp(Q=np.eye(2), A=np.eye(2),
                            lower=np.array([-np.inf, -np.inf]),
                            upper=np.array([np.inf, np.inf]))
    sol = solve_qp(prob)
    assert np.abs(sol.x).max() < 1e-6


def test_infeasible_detected():
    prob = BoxConstrainedQp(Q=np.eye(1), A=np.array([[1.0], [1.0]]),
                            lower=np.array([-np.inf, 1.0]),
                            upper=np.array([0.0, np.inf]))
    sol = solve_qp(prob)
    assert sol.status == STATUS_INFEASIBLE


def test_matches_active_set_oracle():
    rng = np.random.default_rng(0)
    for trial in range(60):
        d = int(rng.integers(1, 5))
        m = int(rng.integers(1, 5))
        Q = spd(rng, d)
        A = rng.normal(size=(m, d))
        center = A @ rng.normal(size=d)   # keep the box reachable
        width = rng.uniform(0.1, 1.5, size=m)
        lower = center - width
        upper = center + width
        prob = BoxConstrainedQp(Q=Q, A=A, lower=lower, upper=upper)
        sol = solve_qp(prob)
        assert sol.status == STATUS_OPTIMAL, trial
        ref = qp_oracle(Q, A, lower, upper)
        assert np.abs(sol.x - ref).max() < 1e-5, trial


def test_optimal_beats_random_feasible_points():
    rng = np.random.default_rng(1)
    d = 4
    Q = spd(rng, d)
    A = rng.normal(size=(d, d))
    x0 = rng.normal(size=d)
    lower = A @ x0 - 0.5
    upper = A @ x0 + 0.5
    prob = BoxConstrainedQp(Q=Q, A=A, lower=lower, upper=upper)
    sol = solve_qp(prob)
    assert sol.status == STATUS_OPTIMAL
    Ainv = np.linalg.inv(A)
    for _ in range(50):
        z = rng.uniform(lower, upper)
        x = Ainv @ z
        assert sol.objective <= 0.5 * x @ Q @ x + 1e-6


def test_complementary_slackness():
    rng = np.random.default_rng(2)
    d = 3
    Q = spd(rng, d)
    A = rng.normal(size=(4, d))
    center = A @ rng.normal(size=d)
    prob = BoxConstrainedQp(Q=Q, A=A, lower=center - 0.3, upper=center + 0.3)
    sol = solve_qp(prob)
    assert sol.status == STATUS_OPTIMAL
    Ax = A @ sol.x
    for i in range(4):
        yi = sol.dual[i]
        if yi > 1e-8:       # pushing against the upper bound
            assert abs(Ax[i] - prob.upper[i]) < 1e-6
        elif yi < -1e-8:    # pushing against the lower bound
            assert abs(Ax[i] - prob.lower[i]) < 1e-6
    # stationarity with reported duals
    assert np.abs(Q @ sol.x + A.T @ sol.dual).max() < 1e-6


def test_argmin_invariant_under_cost_scaling():
    rng = np.random.default_rng(3)
    d = 3
    Q = spd(rng, d)
    A = rng.normal(size=(3, d))
    center = A @ rng.normal(size=d)
    lower, upper = center - 0.2, center + 0.2
    xa = solve_qp(BoxConstrainedQp(Q=Q, A=A, lower=lower, upper=upper)).x
    xb = solve_qp(BoxConstrainedQp(Q=7.5 * Q, A=A, lower=lower, upper=upper)).x
    assert np.abs(xa - xb).max() < 1e-7


def test_batched_rows_match_individual_solves():
    rng = np.random.default_rng(4)
    d = 5
    Q = spd(rng, d)
    A = rng.normal(size=(d, d))
    handle = QpHandle(Q, A)
    centers = A @ rng.normal(size=(d, 3))
    lowers = centers - 0.4
    uppers = centers + 0.4
    xs, _, status, _, _ = handle.solve_batch(lowers, uppers)
    assert all(s == STATUS_OPTIMAL for s in status)
    for k in range(3):
        single = solve_qp(BoxConstrainedQp(Q=Q, A=A, lower=lowers[:, k],
                                           upper=uppers[:, k]))
        assert np.abs(xs[:, k] - single.x).max() < 1e-5


def test_validation_errors():
    with pytest.raises(NonPsdCost):
        BoxConstrainedQp(Q=np.array([[0.0, 1.0], [0.0, 0.0]]), A=np.eye(2),
                         lower=np.zeros(2), upper=np.ones(2))
    with pytest.raises(NonPsdCost):
        BoxConstrainedQp(Q=np.array([[-1.0, 0.0], [0.0, 1.0]]), A=np.eye(2),
                         lower=np.zeros(2), upper=np.ones(2))
    with pytest.raises(DimensionMismatch):
        BoxConstrainedQp(Q=np.eye(2), A=np.eye(3), lower=np.zeros(3),
                         upper=np.ones(3))
    with pytest.raises(ValueError):
        BoxConstrainedQp(Q=np.eye(2), A=np.eye(2), lower=np.ones(2),
                         upper=np.zeros(2))


def test_tight_tolerance_config_respected():
    prob = BoxConstrainedQp(Q=np.eye(2), A=np.array([[1.0, 1.0]]),
                            lower=np.array([1.0]), upper=np.array([np.inf]))
    sol = solve_qp(prob, SolverConfig(max_iter=50_000, tol=1e-9))
    assert np.abs(sol.x - [0.5, 0.5]).max() < 1e-8
