import numpy as np
import pytest

from oracles import lasso_oracle

from ggmdiff.core import SolverConfig, standardize
from ggmdiff.lasso import solve_lasso, subgradient

CFG = SolverConfig(max_iter=20_000, tol=1e-12)


def hadamard_design():
    H = np.array([[1, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1], [1, -1, -1, 1]],
                 dtype=float)
    return standardize(H[:, 1:])


def random_instance(rng, n, p):
    X = standardize(rng.normal(size=(n, p)))
    beta = rng.normal(size=p) * rng.integers(0, 2, size=p)
    y = X.data @ beta + 0.5 * rng.normal(size=n)
    return X, y


def test_full_shrinkage_threshold():
    rng = np.random.default_rng(0)
    X, y = random_instance(rng, 12, 3)
    lam_max = np.abs(X.data.T @ y / X.n).max()
    fit = solve_lasso(X, y, lam_max * (1 + 1e-10), CFG)
    assert np.all(fit.beta == 0)


def test_orthonormal_soft_threshold():
    # X'y/n = (1.0, 0.2, -0.8), lam = 0.5 -> (0.5, 0, -0.3)
    X = hadamard_design()
    y = X.data @ np.array([1.0, 0.2, -0.8])
    fit = solve_lasso(X, y, 0.5, CFG)
    assert np.allclose(fit.beta, [0.5, 0.0, -0.3], atol=1e-10)


def test_matches_sign_pattern_oracle():
    rng = np.random.default_rng(1)
    for trial in range(50):
        X, y = random_instance(rng, 10, 3)
        lam = float(rng.uniform(0.05, 0.8))
        fit = solve_lasso(X, y, lam, CFG)
        ref = lasso_oracle(X.data, y, lam)
        assert np.abs(fit.beta - ref).max() < 1e-6, trial


def test_subgradient_zero_residual():
    rng = np.random.default_rng(2)
    X, _ = random_instance(rng, 15, 4)
    beta = rng.normal(size=4)
    y = X.data @ beta
    assert np.abs(subgradient(X, y, beta)).max() < 1e-12


def test_subgradient_null_model():
    rng = np.random.default_rng(3)
    X, y = random_instance(rng, 15, 4)
    assert np.allclose(subgradient(X, y, np.zeros(4)), X.data.T @ y / X.n)


def test_subgradient_matches_dense_multiply():
    rng = np.random.default_rng(4)
    X, y = random_instance(rng, 9, 3)
    beta = rng.normal(size=3)
    ref = X.data.T @ (y - X.data @ beta) / X.n
    assert np.allclose(subgradient(X, y, beta), ref, atol=1e-14)


def test_kkt_conditions_hold():
    rng = np.random.default_rng(5)
    for _ in range(10):
        X, y = random_instance(rng, 25, 6)
        lam = float(rng.uniform(0.02, 0.5))
        fit = solve_lasso(X, y, lam, CFG)
        assert np.abs(fit.k_hat - subgradient(X, y, fit.beta)).max() < 1e-10
        assert np.max(np.abs(fit.k_hat)) <= lam + 1e-8
        on = np.abs(fit.beta) > 1e-9
        if on.any():
            assert np.abs(fit.k_hat[on] - lam * np.sign(fit.beta[on])).max() < 1e-8


def test_objective_monotone_nonincreasing():
    rng = np.random.default_rng(6)
    X, y = random_instance(rng, 30, 8)
    fit = solve_lasso(X, y, 0.1, CFG)
    assert np.all(np.diff(fit.objective_history) <= 1e-12)


def test_column_reordering_invariance():
    rng = np.random.default_rng(7)
    X, y = random_instance(rng, 20, 5)
    perm = rng.permutation(5)
    fit = solve_lasso(X, y, 0.15, CFG)
    Xp = standardize(X.data[:, perm])
    fit_p = solve_lasso(Xp, y, 0.15, CFG)
    back = np.empty(5)
    back[perm] = fit_p.beta
    assert np.abs(back - fit.beta).max() < 1e-8


def test_lambda_zero_is_least_squares():
    rng = np.random.default_rng(8)
    X, y = random_instance(rng, 30, 4)
    fit = solve_lasso(X, y, 0.0, CFG)
    ols, *_ = np.linalg.lstsq(X.data, y, rcond=None)
    assert np.abs(fit.beta - ols).max() < 1e-8


def test_negative_lambda_rejected():
    rng = np.random.default_rng(9)
    X, y = random_instance(rng, 10, 2)
    with pytest.raises(ValueError):
        solve_lasso(X, y, -0.1, CFG)
