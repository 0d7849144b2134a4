"""Two-task fused lasso: joint fit with an l1 penalty tying the tasks together.

Objective: (1/(2n1))||y1 - X1 b1||^2 + (1/(2n2))||y2 - X2 b2||^2
           + lam1*(||b1||_1 + ||b2||_1) + lam2*||b1 - b2||_1

Block coordinate descent over coordinate pairs (b1_j, b2_j); each pair update
is solved exactly by sign-case analysis (see _kernels.pair_min), so no step
size is tuned and every sweep decreases the objective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import fused_cd
from .core import RegularizationParams, SampleMatrix, SolverConfig
from .errors import DimensionMismatch, NotConverged

TIE_TOL = 1e-12


def _abs_subdiff_violation(target: float, lam: float, b: float, support_tol: float) -> float:
    """Distance from ``target`` to lam * subdifferential of |b|."""
    if abs(b) > support_tol:
        return abs(target - lam * (1.0 if b > 0 else -1.0))
    return max(0.0, abs(target) - lam)


def _pair_kkt_violation(k1: float, k2: float, b1: float, b2: float,
                        lam1: float, lam2: float, support_tol: float) -> float:
    """Exact optimality residual of one coordinate pair.

    There must exist u in subdiff|b1|, v in subdiff|b2|, w in subdiff|b1-b2|
    with k1 = lam1*u + lam2*w and k2 = lam1*v - lam2*w. Returns the smallest
    eps by which those conditions must be relaxed to hold.
    """
    if lam2 == 0.0:
        return max(_abs_subdiff_violation(k1, lam1, b1, support_tol),
                    _abs_subdiff_violation(k2, lam1, b2, support_tol))
    d = b1 - b2
    if abs(d) > support_tol:
        w = 1.0 if d > 0 else -1.0
        return max(_abs_subdiff_violation(k1 - lam2 * w, lam1, b1, support_tol),
                    _abs_subdiff_violation(k2 + lam2 * w, lam1, b2, support_tol))
    # tied pair: w ranges over [-1, 1]; each task contributes a piecewise-linear
    # convex function of w, zero exactly where its subgradient condition holds.
    # f1(w) = viol of task 1 given w, breakpoints where |k1 - lam2*w| = lam1 etc.
    cands = [-1.0, 1.0]
    if abs(b1) > support_tol:
        s = 1.0 if b1 > 0 else -1.0
        lo1 = hi1 = (k1 - lam1 * s) / lam2
    else:
        lo1 = (k1 - lam1) / lam2
        hi1 = (k1 + lam1) / lam2
    if abs(b2) > support_tol:
        s = 1.0 if b2 > 0 else -1.0
        lo2 = hi2 = (lam1 * s - k2) / lam2
    else:
        lo2 = (-k2 - lam1) / lam2
        hi2 = (-k2 + lam1) / lam2
    cands += [lo1, hi1, lo2, hi2, 0.5 * (hi1 + lo2), 0.5 * (hi2 + lo1)]

    def dist(w, lo, hi):
        if w < lo:
            return lo - w
        if w > hi:
            return w - hi
        return 0.0

    best = np.inf
    for w in cands:
        w = min(1.0, max(-1.0, w))
        best = min(best, lam2 * max(dist(w, lo1, hi1), dist(w, lo2, hi2)))
    return float(best)


@dataclass(frozen=True)
class FusedFit:
    """Joint solution with per-task penalty subgradients."""

    beta1: np.ndarray
    beta2: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    params: RegularizationParams
    objective: float
    iterations: int
    objective_history: np.ndarray

    def kkt_violation(self, support_tol: float = 1e-9) -> float:
        """Worst pairwise optimality residual across coordinates."""
        worst = 0.0
        for j in range(self.beta1.shape[0]):
            worst = max(worst, _pair_kkt_violation(
                float(self.k1[j]), float(self.k2[j]),
                float(self.beta1[j]), float(self.beta2[j]),
                self.params.lambda1, self.params.lambda2, support_tol))
        return worst


def fused_objective(X1: SampleMatrix, y1: np.ndarray, X2: SampleMatrix, y2: np.ndarray,
                    beta1: np.ndarray, beta2: np.ndarray,
                    params: RegularizationParams) -> float:
    r1 = y1 - X1.data @ beta1
    r2 = y2 - X2.data @ beta2
    return float(r1 @ r1 / (2.0 * X1.n) + r2 @ r2 / (2.0 * X2.n)
                 + params.lambda1 * (np.abs(beta1).sum() + np.abs(beta2).sum())
                 + params.lambda2 * np.abs(beta1 - beta2).sum())


def basic_inequality_gap(X1: SampleMatrix, y1: np.ndarray, X2: SampleMatrix,
                         y2: np.ndarray, fit: FusedFit, beta1_true: np.ndarray,
                         beta2_true: np.ndarray) -> float:
    """lhs - rhs of the minimizer inequality against the true coefficients.

    With the block-normalized stacked design X_N = blkdiag(X1/sqrt(n1),
    X2/sqrt(n2)) and true noise eps_j = y_j - X_j beta_j, any minimizer of the
    fused objective satisfies

        ||X_N(bhat - b)||^2 + 2*lam1*||bhat||_1 + 2*lam2*||bhat_d||_1
        <= 2*eps_N'X_N(bhat - b) + 2*lam1*||b||_1 + 2*lam2*||b_d||_1

    (the factor 2 maps our 1/(2n) loss convention onto penalties stated for a
    1/n loss). Returns a value <= 0 up to solver tolerance.
    """
    lam1, lam2 = fit.params.lambda1, fit.params.lambda2
    u1 = X1.data @ (fit.beta1 - beta1_true)
    u2 = X2.data @ (fit.beta2 - beta2_true)
    eps1 = y1 - X1.data @ beta1_true
    eps2 = y2 - X2.data @ beta2_true
    quad = u1 @ u1 / X1.n + u2 @ u2 / X2.n
    cross = 2.0 * (eps1 @ u1 / X1.n + eps2 @ u2 / X2.n)
    lhs = (quad + 2.0 * lam1 * (np.abs(fit.beta1).sum() + np.abs(fit.beta2).sum())
           + 2.0 * lam2 * np.abs(fit.beta1 - fit.beta2).sum())
    rhs = (cross + 2.0 * lam1 * (np.abs(beta1_true).sum() + np.abs(beta2_true).sum())
           + 2.0 * lam2 * np.abs(beta1_true - beta2_true).sum())
    return float(lhs - rhs)


def solve_fused_gram(G1: np.ndarray, c1: np.ndarray, G2: np.ndarray, c2: np.ndarray,
                     params: RegularizationParams, cfg: SolverConfig,
                     beta1_0: np.ndarray | None = None,
                     beta2_0: np.ndarray | None = None,
                     const_term: float = 0.0,
                     check_kkt: bool = True) -> FusedFit:
    """Gram-form solve with G_j = X_j'X_j/n_j and c_j = X_j'y_j/n_j."""
    p = c1.shape[0]
    beta1 = np.zeros(p) if beta1_0 is None else np.array(beta1_0, dtype=np.float64)
    beta2 = np.zeros(p) if beta2_0 is None else np.array(beta2_0, dtype=np.float64)
    sweeps, hist, g1, g2 = fused_cd(
        np.ascontiguousarray(G1), np.ascontiguousarray(c1),
        np.ascontiguousarray(G2), np.ascontiguousarray(c2),
        params.lambda1, params.lambda2, beta1, beta2, cfg.max_iter, cfg.tol)
    fit = FusedFit(beta1=beta1, beta2=beta2,
                   k1=c1 - G1 @ beta1, k2=c2 - G2 @ beta2,
                   params=params, objective=float(hist[-1]) + const_term,
                   iterations=int(sweeps), objective_history=hist + const_term)
    if check_kkt and fit.kkt_violation() > max(cfg.tol * 100, 1e-7):
        raise NotConverged(
            f"fused KKT violation {fit.kkt_violation():.2e} after {sweeps} sweeps", fit=fit)
    return fit


def solve_fused(X1: SampleMatrix, y1: np.ndarray, X2: SampleMatrix, y2: np.ndarray,
                params: RegularizationParams, cfg: SolverConfig) -> FusedFit:
    """Minimize the two-task fused objective; see module docstring."""
    y1 = np.asarray(y1, dtype=np.float64)
    y2 = np.asarray(y2, dtype=np.float64)
    if X1.p != X2.p:
        raise DimensionMismatch(f"tasks disagree on p: {X1.p} vs {X2.p}")
    if y1.shape[0] != X1.n or y2.shape[0] != X2.n:
        raise DimensionMismatch("response lengths do not match design rows")
    G1 = X1.data.T @ X1.data / X1.n
    c1 = X1.data.T @ y1 / X1.n
    G2 = X2.data.T @ X2.data / X2.n
    c2 = X2.data.T @ y2 / X2.n
    const = float(y1 @ y1) / (2.0 * X1.n) + float(y2 @ y2) / (2.0 * X2.n)
    fit = solve_fused_gram(G1, c1, G2, c2, params, cfg, const_term=const)
    # exact subgradients from the raw data
    k1 = X1.data.T @ (y1 - X1.data @ fit.beta1) / X1.n
    k2 = X2.data.T @ (y2 - X2.data @ fit.beta2) / X2.n
    return FusedFit(beta1=fit.beta1, beta2=fit.beta2, k1=k1, k2=k2, params=params,
                    objective=fused_objective(X1, y1, X2, y2, fit.beta1, fit.beta2, params),
                    iterations=fit.iterations, objective_history=fit.objective_history)
