"""Single-task lasso via cyclic coordinate descent with exact soft-threshold updates.

Objective convention: (1/(2n)) * ||y - X b||^2 + lam * ||b||_1, so that the
stationarity condition reads k = X'(y - Xb)/n with |k|_inf <= lam and
k_j = lam * sign(b_j) on the support.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import lasso_cd
from .core import SampleMatrix, SolverConfig
from .errors import DimensionMismatch, NotConverged


@dataclass(frozen=True)
class LassoFit:
    """Solution with its penalty subgradient and solver diagnostics."""

    beta: np.ndarray
    k_hat: np.ndarray
    lam: float
    objective: float
    iterations: int
    objective_history: np.ndarray

    def kkt_violation(self, support_tol: float = 1e-9) -> float:
        """Worst violation of |k|_inf <= lam and k_j = lam*sign(b_j) on support."""
        v = max(0.0, float(np.max(np.abs(self.k_hat))) - self.lam)
        on = np.abs(self.beta) > support_tol
        if np.any(on):
            v = max(v, float(np.max(np.abs(
                self.k_hat[on] - self.lam * np.sign(self.beta[on])))))
        return v


def subgradient(X: SampleMatrix, y: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Return X'(y - X beta)/n, the penalty subgradient at a stationary point."""
    y = np.asarray(y, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    if y.shape[0] != X.n or beta.shape[0] != X.p:
        raise DimensionMismatch(
            f"shapes disagree: X {X.data.shape}, y {y.shape}, beta {beta.shape}")
    return X.data.T @ (y - X.data @ beta) / X.n


def objective_value(X: SampleMatrix, y: np.ndarray, beta: np.ndarray, lam: float) -> float:
    r = y - X.data @ beta
    return float(r @ r / (2.0 * X.n) + lam * np.sum(np.abs(beta)))


def solve_lasso_gram(G: np.ndarray, c: np.ndarray, lam: float, cfg: SolverConfig,
                     beta0: np.ndarray | None = None, yty_over_2n: float = 0.0,
                     kkt_tol: float | None = None) -> LassoFit:
    """Gram-form solve: G = X'X/n, c = X'y/n.

    ``yty_over_2n`` only shifts the reported objective to the data scale.
    """
    p = c.shape[0]
    beta = np.zeros(p) if beta0 is None else np.array(beta0, dtype=np.float64)
    sweeps, hist, grad = lasso_cd(np.ascontiguousarray(G), np.ascontiguousarray(c),
                                  float(lam), beta, cfg.max_iter, cfg.tol)
    k_hat = c - G @ beta
    fit = LassoFit(beta=beta, k_hat=k_hat, lam=float(lam),
                   objective=float(hist[-1]) + yty_over_2n, iterations=int(sweeps),
                   objective_history=hist + yty_over_2n)
    tol = cfg.tol if kkt_tol is None else kkt_tol
    if fit.kkt_violation() > max(tol, 1e-8):
        raise NotConverged(
            f"lasso KKT violation {fit.kkt_violation():.2e} after {sweeps} sweeps", fit=fit)
    return fit


def solve_lasso(X: SampleMatrix, y: np.ndarray, lam: float, cfg: SolverConfig) -> LassoFit:
    """Minimize (1/(2n))||y - Xb||^2 + lam*||b||_1."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape[0] != X.n:
        raise DimensionMismatch(f"y has {y.shape[0]} rows, X has {X.n}")
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    G = X.data.T @ X.data / X.n
    c = X.data.T @ y / X.n
    fit = solve_lasso_gram(G, c, lam, cfg, yty_over_2n=float(y @ y) / (2.0 * X.n))
    # report the subgradient from the raw data, not the Gram shortcut
    k_hat = subgradient(X, y, fit.beta)
    return LassoFit(beta=fit.beta, k_hat=k_hat, lam=fit.lam,
                    objective=objective_value(X, y, fit.beta, lam),
                    iterations=fit.iterations, objective_history=fit.objective_history)
