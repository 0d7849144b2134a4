"""Debiasing machinery: correction matrices, bias budgets, variances.

The single-task path follows the variance-minimizing quadratic-program
construction (one M per design); the joint path estimates a pair (M1, M2)
per node under coupled sum/difference constraints so that the debiased
difference of the two fits has the closed-form Gaussian distribution used
for testing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import EmpiricalCovariance, SolverConfig
from .errors import DimensionMismatch, NonPositiveVariance
from .fused import FusedFit
from .lasso import LassoFit
from .qp import QP_DEFAULT_CONFIG, QpHandle, STATUS_OPTIMAL

RELAX_FACTOR = 1.5
MAX_RELAXATIONS = 120
CONSTRAINT_SLACK = 1.0 + 1e-6


@dataclass(frozen=True)
class DebiasMatrices:
    """Correction matrices with the budgets they were solved under.

    ``M2`` is None for the single-task case. ``relaxations`` counts the
    multiplicative budget inflations that were needed before every row's
    program became feasible.
    """

    M1: np.ndarray
    M2: np.ndarray | None
    mu1: float
    mu2: float
    feasible: bool
    relaxations: int

    def constraint_norms(self, sigma1: EmpiricalCovariance,
                         sigma2: EmpiricalCovariance | None = None) -> tuple:
        """Realized max-entry constraint norms, by direct matrix arithmetic."""
        if self.M2 is None:
            r = self.M1 @ sigma1.sigma_hat - np.eye(self.M1.shape[0])
            return (float(np.abs(r).max()),)
        s = self.M1 @ sigma1.sigma_hat + self.M2 @ sigma2.sigma_hat
        d = self.M1 @ sigma1.sigma_hat - self.M2 @ sigma2.sigma_hat
        s -= 2.0 * np.eye(s.shape[0])
        return float(np.abs(s).max()), float(np.abs(d).max())

    def verify(self, sigma1: EmpiricalCovariance,
               sigma2: EmpiricalCovariance | None = None) -> bool:
        """Re-check feasibility independently of the QP solver's report."""
        norms = self.constraint_norms(sigma1, sigma2)
        if self.M2 is None:
            return norms[0] <= self.mu1 * CONSTRAINT_SLACK + 1e-12
        return (norms[0] <= self.mu1 * CONSTRAINT_SLACK + 1e-12
                and norms[1] <= self.mu2 * CONSTRAINT_SLACK + 1e-12)


@dataclass(frozen=True)
class DebiasedDifference:
    """Debiased difference estimate with standard errors and z statistics."""

    beta_d: np.ndarray
    sigma_d: np.ndarray
    z: np.ndarray


def bias_bounds(lambda1: float, lambda2: float, s_d: int, s_12: int, n2: int,
                c: float = 2.0, a: float = 2.0, m: float = 0.01) -> tuple[float, float]:
    """Budgets (mu1, mu2) for the joint debiasing constraints.

    mu1 = 1 / (c * lambda2 * s_d * n2^m)
    mu2 = 1 / (a * (lambda1*s_12 + lambda2*s_d) * n2^m)
    """
    if lambda1 <= 0 or lambda2 <= 0:
        raise ValueError("penalty levels must be positive")
    if s_d <= 0 or s_12 <= 0 or n2 <= 0:
        raise ValueError("sparsity levels and n2 must be positive")
    if not (c > 1 and a > 1):
        raise ValueError("c and a must exceed 1")
    if not 0 < m < 1:
        raise ValueError("m must lie in (0, 1)")
    scale = n2 ** m
    mu1 = 1.0 / (c * lambda2 * s_d * scale)
    mu2 = 1.0 / (a * (lambda1 * s_12 + lambda2 * s_d) * scale)
    return mu1, mu2


def single_task_budget(p: int, n: int, scale: float = 2.0) -> float:
    """Single-task constraint budget scale * sqrt(log p / n)."""
    return scale * math.sqrt(math.log(max(p, 2)) / n)


def estimate_m_single(sigma: EmpiricalCovariance, mu: float,
                      cfg: SolverConfig = QP_DEFAULT_CONFIG) -> DebiasMatrices:
    """Rowwise variance-minimizing M with |Sigma m_i - e_i|_inf <= mu.

    Infeasible rows trigger a multiplicative (x1.5) budget relaxation that
    applies to the whole matrix from that row onward; already-solved rows
    remain feasible under the looser budget.
    """
    if mu <= 0:
        raise ValueError("budget must be positive")
    S = sigma.sigma_hat
    p = S.shape[0]
    handle = QpHandle(2.0 * S, S)
    I = np.eye(p)
    M = np.zeros((p, p))
    relaxations = 0
    pending = list(range(p))
    while pending:
        lowers = I[:, pending] - mu
        uppers = I[:, pending] + mu
        x, _, status, _, _ = handle.solve_batch(lowers, uppers, cfg)
        failed = []
        for k, i in enumerate(pending):
            if status[k] == STATUS_OPTIMAL:
                M[i, :] = x[:, k]
            else:
                failed.append(i)
        pending = failed
        if pending:
            mu *= RELAX_FACTOR
            relaxations += 1
            if relaxations > MAX_RELAXATIONS:
                raise RuntimeError("single-task M estimation failed to become feasible")
    out = DebiasMatrices(M1=M, M2=None, mu1=mu, mu2=0.0,
                         feasible=True, relaxations=relaxations)
    return DebiasMatrices(M1=M, M2=None, mu1=mu, mu2=0.0,
                          feasible=out.verify(sigma), relaxations=relaxations)


def estimate_m_joint(sigma1: EmpiricalCovariance, sigma2: EmpiricalCovariance,
                     n1: int, n2: int, mu1: float, mu2: float,
                     cfg: SolverConfig = QP_DEFAULT_CONFIG) -> DebiasMatrices:
    """Jointly estimate (M1, M2) rowwise.

    Per row i, minimize (1/n1) m1'S1 m1 + (1/n2) m2'S2 m2 subject to
    |S1 m1 + S2 m2 - 2 e_i|_inf <= mu1 and |S1 m1 - S2 m2|_inf <= mu2.
    """
    S1, S2 = sigma1.sigma_hat, sigma2.sigma_hat
    p = S1.shape[0]
    if S2.shape[0] != p:
        raise DimensionMismatch("covariances disagree on dimension")
    if mu1 <= 0 or mu2 <= 0:
        raise ValueError("budgets must be positive")
    Q = np.zeros((2 * p, 2 * p))
    Q[:p, :p] = (2.0 / n1) * S1
    Q[p:, p:] = (2.0 / n2) * S2
    A = np.block([[S1, S2], [S1, -S2]])
    handle = QpHandle(Q, A)
    I = np.eye(p)
    M1 = np.zeros((p, p))
    M2 = np.zeros((p, p))
    relaxations = 0
    pending = list(range(p))
    while pending:
        k = len(pending)
        lowers = np.vstack([2.0 * I[:, pending] - mu1, np.full((p, k), -mu2)])
        uppers = np.vstack([2.0 * I[:, pending] + mu1, np.full((p, k), mu2)])
        x, _, status, _, _ = handle.solve_batch(lowers, uppers, cfg)
        failed = []
        for k, i in enumerate(pending):
            if status[k] == STATUS_OPTIMAL:
                M1[i, :] = x[:p, k]
                M2[i, :] = x[p:, k]
            else:
                failed.append(i)
        pending = failed
        if pending:
            mu1 *= RELAX_FACTOR
            mu2 *= RELAX_FACTOR
            relaxations += 1
            if relaxations > MAX_RELAXATIONS:
                raise RuntimeError("joint M estimation failed to become feasible")
    out = DebiasMatrices(M1=M1, M2=M2, mu1=mu1, mu2=mu2,
                         feasible=True, relaxations=relaxations)
    return DebiasMatrices(M1=M1, M2=M2, mu1=mu1, mu2=mu2,
                          feasible=out.verify(sigma1, sigma2), relaxations=relaxations)


def debias_single(fit: LassoFit, M: DebiasMatrices, X, y: np.ndarray) -> np.ndarray:
    """beta + M X'(y - X beta)/n."""
    y = np.asarray(y, dtype=np.float64)
    k_hat = X.data.T @ (y - X.data @ fit.beta) / X.n
    return fit.beta + M.M1 @ k_hat


def variance_difference(M: DebiasMatrices, sigma1: EmpiricalCovariance,
                        sigma2: EmpiricalCovariance, sigma_noise1: float,
                        sigma_noise2: float, n1: int, n2: int) -> np.ndarray:
    """diag((s1^2/n1) M1 S1 M1' + (s2^2/n2) M2 S2 M2'), all entries > 0."""
    M1 = M.M1
    M2 = M.M2 if M.M2 is not None else M.M1
    v = ((sigma_noise1**2 / n1) * np.einsum("ij,jk,ik->i", M1, sigma1.sigma_hat, M1)
         + (sigma_noise2**2 / n2) * np.einsum("ij,jk,ik->i", M2, sigma2.sigma_hat, M2))
    if np.any(v <= 0):
        raise NonPositiveVariance(f"variance floor {v.min():.3e} <= 0")
    return v


def debias_difference(fit: FusedFit, M: DebiasMatrices,
                      X1, y1: np.ndarray, X2, y2: np.ndarray,
                      sigma_noise1: float, sigma_noise2: float) -> DebiasedDifference:
    """Debiased difference, its standard errors, and z statistics."""
    y1 = np.asarray(y1, dtype=np.float64)
    y2 = np.asarray(y2, dtype=np.float64)
    k1 = X1.data.T @ (y1 - X1.data @ fit.beta1) / X1.n
    k2 = X2.data.T @ (y2 - X2.data @ fit.beta2) / X2.n
    beta_d = (fit.beta1 - fit.beta2) + M.M1 @ k1 - (M.M2 if M.M2 is not None else M.M1) @ k2
    from .core import covariance
    var = variance_difference(M, covariance(X1), covariance(X2),
                              sigma_noise1, sigma_noise2, X1.n, X2.n)
    sigma_d = np.sqrt(var)
    return DebiasedDifference(beta_d=beta_d, sigma_d=sigma_d, z=beta_d / sigma_d)


def empirical_delta(fit: FusedFit, M: DebiasMatrices, sigma1: EmpiricalCovariance,
                    sigma2: EmpiricalCovariance, beta1_true: np.ndarray,
                    beta2_true: np.ndarray) -> float:
    """Sup norm of the bias remainder, computable when the truth is known."""
    p = fit.beta1.shape[0]
    I = np.eye(p)
    d1 = (M.M1 @ sigma1.sigma_hat - I) @ (fit.beta1 - beta1_true)
    M2 = M.M2 if M.M2 is not None else M.M1
    d2 = (M2 @ sigma2.sigma_hat - I) @ (fit.beta2 - beta2_true)
    return float(np.abs(d1 - d2).max())


def holder_bound(fit: FusedFit, M: DebiasMatrices, sigma1: EmpiricalCovariance,
                 sigma2: EmpiricalCovariance, beta1_true: np.ndarray,
                 beta2_true: np.ndarray) -> float:
    """Upper bound on the bias remainder from the realized constraint norms."""
    r1, r2 = M.constraint_norms(sigma1, sigma2)
    d_err = np.abs((fit.beta1 - fit.beta2) - (beta1_true - beta2_true)).sum()
    a_err = np.abs((fit.beta1 + fit.beta2) - (beta1_true + beta2_true)).sum()
    return 0.5 * r1 * d_err + 0.5 * r2 * a_err
