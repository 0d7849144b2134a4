"""Nodewise orchestration: per-node regressions, debiasing, and the test matrix.

For every node v, the column X_v is regressed on all other columns in both
datasets; debiased coefficient differences divided by their standard errors
fill row v of a P x (P-1) z-statistic matrix. Two pipelines share this
skeleton: independent lassos with single-task debiasing, and the joint fused
fit with coupled debiasing.

Everything operates on Gram aggregates extracted from the full empirical
covariance (and per-fold covariances for cross-validation), so the nodewise
loop never touches the raw samples again after the initial pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .core import (EmpiricalCovariance, RegularizationParams, SampleMatrix,
                   SolverConfig, covariance)
from .debias import (DebiasMatrices, bias_bounds, estimate_m_joint,
                     estimate_m_single, single_task_budget)
from .errors import (DegenerateResidual, DimensionMismatch, EmptyInput,
                     GgmDiffError, NodeFailure)
from .fused import FusedFit, solve_fused_gram
from .lasso import LassoFit, solve_lasso_gram
from .qp import QP_DEFAULT_CONFIG

METHOD_LASSO = "lasso"
METHOD_FUSED = "fused"

CD_DEFAULT_CONFIG = SolverConfig(max_iter=20_000, tol=1e-10)
SUPPORT_TOL = 1e-9


@dataclass(frozen=True)
class BoundsConfig:
    """Assumed sparsity levels and slack constants for the joint budgets.

    The closed-form budgets blow up when cross-validation settles on a small
    fusion penalty (they scale like 1/lambda2), to the point of admitting
    M = 0 and degenerate zero-variance statistics. ``cap1_scale`` and
    ``cap2_scale`` bound each budget by scale * sqrt(log d / n2), the usual
    debiasing-constraint magnitude, which keeps the bias-to-stderr ratio
    controlled at every node.
    """

    c: float = 2.0
    a: float = 2.0
    s_d: int = 2
    s_12: int = 15
    m: float = 0.01
    cap1_scale: float = 1.0
    cap2_scale: float = 1.0

    def capped(self, mu1: float, mu2: float, d: int, n2: int) -> tuple[float, float]:
        base = math.sqrt(math.log(max(d, 2)) / n2)
        return min(mu1, self.cap1_scale * base), min(mu2, self.cap2_scale * base)


@dataclass(frozen=True)
class NoiseEstimate:
    sigma1: float
    sigma2: float


@dataclass(frozen=True)
class TestStatMatrix:
    """z statistics for every ordered node pair, row = regression node."""

    B: np.ndarray
    pvals: np.ndarray
    beta_d: np.ndarray
    sigma_d: np.ndarray
    method: str

    @property
    def p(self) -> int:
        return self.B.shape[0]

    def entry_node(self, v: int, col: int) -> int:
        """Graph node tested by column ``col`` of row ``v``."""
        return col if col < v else col + 1


@dataclass(frozen=True)
class NodeDetail:
    """Per-node artifacts kept for invariant checks and simulation scoring."""

    node: int
    noise: NoiseEstimate
    lambdas: tuple
    fit: object
    M: DebiasMatrices
    beta_d: np.ndarray
    sigma_d: np.ndarray


def _fold_blocks(n: int, folds: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Contiguous blocks of a seeded shuffle of range(n)."""
    order = rng.permutation(n)
    bounds = [round(i * n / folds) for i in range(folds + 1)]
    return [np.sort(order[bounds[i]:bounds[i + 1]]) for i in range(folds)]


class _TaskGrams:
    """Full-data and per-fold second-moment aggregates for one dataset."""

    def __init__(self, X: SampleMatrix, folds: int, rng: np.random.Generator):
        self.n = X.n
        self.p = X.p
        self.full = covariance(X).sigma_hat
        self.fold_test = []
        self.fold_train = []
        self.n_test = []
        self.n_train = []
        for te in _fold_blocks(X.n, folds, rng):
            mask = np.zeros(X.n, dtype=bool)
            mask[te] = True
            Xte = X.data[mask]
            Xtr = X.data[~mask]
            self.fold_test.append(Xte.T @ Xte / len(te))
            self.fold_train.append(Xtr.T @ Xtr / (X.n - len(te)))
            self.n_test.append(len(te))
            self.n_train.append(X.n - len(te))


def _held_out_error(Gte: np.ndarray, v: int, others: np.ndarray, beta: np.ndarray) -> float:
    """Per-sample squared prediction error of beta on a held-out fold."""
    return float(Gte[v, v] - 2.0 * beta @ Gte[others, v]
                 + beta @ Gte[np.ix_(others, others)] @ beta)


def _cv_lasso_gram(grams: _TaskGrams, v: int, others: np.ndarray,
                   lambdas: np.ndarray, cfg: SolverConfig) -> tuple[int, np.ndarray]:
    """Mean CV error per lambda (descending warm starts inside each fold)."""
    nl = len(lambdas)
    errs = np.zeros(nl)
    order = np.argsort(-lambdas)
    for f in range(len(grams.fold_train)):
        Gtr = grams.fold_train[f]
        G = Gtr[np.ix_(others, others)]
        c = Gtr[others, v]
        Gte = grams.fold_test[f]
        beta = np.zeros(len(others))
        for idx in order:
            fit = solve_lasso_gram(G, c, lambdas[idx], cfg, beta0=beta, kkt_tol=np.inf)
            beta = fit.beta
            errs[idx] += _held_out_error(Gte, v, others, beta)
    errs /= len(grams.fold_train)
    # ties toward the larger penalty
    best = 0
    for i in range(nl):
        if errs[i] < errs[best] or (errs[i] == errs[best] and lambdas[i] > lambdas[best]):
            best = i
    return best, errs


def _noise_gram(grams: _TaskGrams, v: int, others: np.ndarray,
                k_grid: np.ndarray, cfg: SolverConfig) -> float:
    """Pilot-lasso noise estimate with degrees-of-freedom correction.

    The pilot penalty is proportional to the noise level being estimated, so
    the estimate is iterated to its fixed point: sigma_0 = 1 (standardized
    response), lambda_t = k * sigma_t * sqrt(log d / n). A noiseless response
    drives the penalty, hence the residual, to zero geometrically.
    """
    d = len(others)
    scale = math.sqrt(math.log(max(d, 2)) / grams.n)
    best, _ = _cv_lasso_gram(grams, v, others, np.asarray(k_grid) * scale, cfg)
    k = float(np.asarray(k_grid)[best])
    G = grams.full[np.ix_(others, others)]
    c = grams.full[others, v]
    sigma = 1.0
    beta = None
    for _ in range(40):
        fit = solve_lasso_gram(G, c, k * sigma * scale, cfg, beta0=beta)
        beta = fit.beta
        s_hat = int(np.sum(np.abs(beta) > SUPPORT_TOL))
        if grams.n <= s_hat:
            raise DegenerateResidual(f"support {s_hat} >= n {grams.n} at node {v}")
        rss_per_n = float(grams.full[v, v] - 2.0 * beta @ c + beta @ G @ beta)
        new_sigma = math.sqrt(max(rss_per_n, 0.0) * grams.n / (grams.n - s_hat))
        done = abs(new_sigma - sigma) <= 1e-4 * max(sigma, 1e-12)
        sigma = new_sigma
        if done or sigma < 1e-9:
            break
    return sigma


def estimate_noise(Xvc: SampleMatrix, xv: np.ndarray,
                   cfg: SolverConfig = CD_DEFAULT_CONFIG,
                   k_grid=None, folds: int = 3) -> float:
    """Residual noise level of regressing ``xv`` on ``Xvc``.

    Pilot fit is a cross-validated lasso; the residual sum of squares is
    divided by n - s_hat (support size of the pilot) rather than n.
    """
    xv = np.asarray(xv, dtype=np.float64)
    if xv.shape[0] != Xvc.n:
        raise DimensionMismatch("xv length does not match design rows")
    if k_grid is None:
        k_grid = RegularizationParams().k_grid
    joint = SampleMatrix(np.column_stack([Xvc.data, xv]), standardized=Xvc.standardized)
    rng = np.random.default_rng(cfg.seed)
    grams = _TaskGrams(joint, folds, rng)
    others = np.arange(Xvc.p)
    return _noise_gram(grams, Xvc.p, others, np.asarray(k_grid), cfg)


def cross_validate_lasso(X: SampleMatrix, y: np.ndarray, k_grid, folds: int,
                         seed: int, cfg: SolverConfig = CD_DEFAULT_CONFIG,
                         lambda_scale: float = 1.0) -> float:
    """Chosen k from the grid, minimizing mean held-out squared error."""
    y = np.asarray(y, dtype=np.float64)
    joint = SampleMatrix(np.column_stack([X.data, y]), standardized=X.standardized)
    grams = _TaskGrams(joint, folds, np.random.default_rng(seed))
    others = np.arange(X.p)
    k_grid = np.asarray(k_grid, dtype=np.float64)
    best, _ = _cv_lasso_gram(grams, X.p, others, k_grid * lambda_scale, cfg)
    return float(k_grid[best])


def _cv_fused_gram(grams1: _TaskGrams, grams2: _TaskGrams, v: int,
                   others: np.ndarray, k_grid: np.ndarray, scale: float,
                   cfg: SolverConfig) -> tuple[float, float]:
    """Joint CV over the (k1, k2) pair grid; errors weighted per sample."""
    nk = len(k_grid)
    folds = len(grams1.fold_train)
    errs = np.zeros((nk, nk))
    d = len(others)
    for f in range(folds):
        G1 = grams1.fold_train[f][np.ix_(others, others)]
        c1 = grams1.fold_train[f][others, v]
        G2 = grams2.fold_train[f][np.ix_(others, others)]
        c2 = grams2.fold_train[f][others, v]
        Gte1 = grams1.fold_test[f]
        Gte2 = grams2.fold_test[f]
        for i1 in range(nk - 1, -1, -1):
            beta1 = np.zeros(d)
            beta2 = np.zeros(d)
            for i2 in range(nk - 1, -1, -1):
                params = RegularizationParams(lambda1=k_grid[i1] * scale,
                                              lambda2=k_grid[i2] * scale,
                                              k_grid=tuple(k_grid))
                fit = solve_fused_gram(G1, c1, G2, c2, params, cfg,
                                       beta1_0=beta1, beta2_0=beta2, check_kkt=False)
                beta1, beta2 = fit.beta1, fit.beta2
                errs[i1, i2] += (_held_out_error(Gte1, v, others, beta1)
                                 + _held_out_error(Gte2, v, others, beta2))
    errs /= folds
    best = (0, 0)
    for i1 in range(nk):
        for i2 in range(nk):
            e, b = errs[i1, i2], errs[best]
            if e < b or (e == b and k_grid[i1] + k_grid[i2] >
                         k_grid[best[0]] + k_grid[best[1]]):
                best = (i1, i2)
    return float(k_grid[best[0]]), float(k_grid[best[1]])


def cross_validate_fused(X1: SampleMatrix, y1: np.ndarray, X2: SampleMatrix,
                         y2: np.ndarray, k_grid, folds: int, seed: int,
                         cfg: SolverConfig = CD_DEFAULT_CONFIG,
                         lambda_scale: float = 1.0) -> tuple[float, float]:
    """Chosen (k1, k2) pair for the fused penalty."""
    rng = np.random.default_rng(seed)
    j1 = SampleMatrix(np.column_stack([X1.data, y1]), standardized=X1.standardized)
    j2 = SampleMatrix(np.column_stack([X2.data, y2]), standardized=X2.standardized)
    grams1 = _TaskGrams(j1, folds, rng)
    grams2 = _TaskGrams(j2, folds, rng)
    others = np.arange(X1.p)
    return _cv_fused_gram(grams1, grams2, X1.p, others,
                          np.asarray(k_grid, dtype=np.float64), lambda_scale, cfg)


def _pvals(B: np.ndarray) -> np.ndarray:
    return 2.0 * norm.sf(np.abs(B))


def _finalize(B, beta_d, sigma_d, method):
    return TestStatMatrix(B=B, pvals=_pvals(B), beta_d=beta_d,
                          sigma_d=sigma_d, method=method)


def nodewise_lasso_stats(X1: SampleMatrix, X2: SampleMatrix,
                         cfg: SolverConfig = CD_DEFAULT_CONFIG,
                         reg: RegularizationParams = RegularizationParams(),
                         qp_cfg: SolverConfig = QP_DEFAULT_CONFIG,
                         mu1: float | None = None, mu2: float | None = None,
                         mu_scale: float = 0.1,
                         details: list | None = None) -> TestStatMatrix:
    """Difference test statistics from two independently debiased lassos."""
    p = _check_pair(X1, X2)
    rng = np.random.default_rng(cfg.seed)
    grams1 = _TaskGrams(X1, reg.cv_folds, rng)
    grams2 = _TaskGrams(X2, reg.cv_folds, rng)
    k_grid = np.asarray(reg.k_grid)
    B = np.zeros((p, p - 1))
    beta_d = np.zeros((p, p - 1))
    sigma_d = np.zeros((p, p - 1))
    all_nodes = np.arange(p)
    for v in range(p):
        try:
            others = np.delete(all_nodes, v)
            d = p - 1
            beta_u = []
            Ms = []
            fits = []
            sigmas = []
            lams = []
            for grams, mu_default in ((grams1, mu1), (grams2, mu2)):
                scale = math.sqrt(math.log(max(d, 2)) / grams.n)
                sigma = _noise_gram(grams, v, others, k_grid, cfg)
                sigmas.append(sigma)
                best, _ = _cv_lasso_gram(grams, v, others, k_grid * sigma * scale, cfg)
                lam = float(k_grid[best] * sigma * scale)
                lams.append(lam)
                G = grams.full[np.ix_(others, others)]
                c = grams.full[others, v]
                fit = solve_lasso_gram(G, c, lam, cfg,
                                       yty_over_2n=float(grams.full[v, v]) / 2.0)
                mu = (single_task_budget(d, grams.n, mu_scale)
                      if mu_default is None else mu_default)
                M = estimate_m_single(EmpiricalCovariance(G, grams.n), mu, qp_cfg)
                beta_u.append(fit.beta + M.M1 @ fit.k_hat)
                Ms.append(M)
                fits.append(fit)
            S1 = grams1.full[np.ix_(others, others)]
            S2 = grams2.full[np.ix_(others, others)]
            var = ((sigmas[0] ** 2 / grams1.n)
                   * np.einsum("ij,jk,ik->i", Ms[0].M1, S1, Ms[0].M1)
                   + (sigmas[1] ** 2 / grams2.n)
                   * np.einsum("ij,jk,ik->i", Ms[1].M1, S2, Ms[1].M1))
            sd = np.sqrt(var)
            diff = beta_u[0] - beta_u[1]
            B[v, :] = diff / sd
            beta_d[v, :] = diff
            sigma_d[v, :] = sd
            if details is not None:
                details.append(NodeDetail(
                    node=v, noise=NoiseEstimate(*sigmas), lambdas=tuple(lams),
                    fit=tuple(fits), M=tuple(Ms), beta_d=diff, sigma_d=sd))
        except GgmDiffError as exc:
            raise NodeFailure(v, exc) from exc
    return _finalize(B, beta_d, sigma_d, METHOD_LASSO)


def nodewise_fused_stats(X1: SampleMatrix, X2: SampleMatrix,
                         cfg: SolverConfig = CD_DEFAULT_CONFIG,
                         reg: RegularizationParams = RegularizationParams(),
                         bounds: BoundsConfig = BoundsConfig(),
                         qp_cfg: SolverConfig = QP_DEFAULT_CONFIG,
                         details: list | None = None) -> TestStatMatrix:
    """Difference test statistics from the jointly debiased fused fit."""
    p = _check_pair(X1, X2)
    rng = np.random.default_rng(cfg.seed)
    grams1 = _TaskGrams(X1, reg.cv_folds, rng)
    grams2 = _TaskGrams(X2, reg.cv_folds, rng)
    k_grid = np.asarray(reg.k_grid)
    B = np.zeros((p, p - 1))
    beta_d = np.zeros((p, p - 1))
    sigma_d = np.zeros((p, p - 1))
    all_nodes = np.arange(p)
    n1, n2 = grams1.n, grams2.n
    for v in range(p):
        try:
            others = np.delete(all_nodes, v)
            d = p - 1
            sig1 = _noise_gram(grams1, v, others, k_grid, cfg)
            sig2 = _noise_gram(grams2, v, others, k_grid, cfg)
            # both penalty levels are calibrated on the scarcer dataset
            scale = sig2 * math.sqrt(math.log(max(d, 2)) / n2)
            k1, k2 = _cv_fused_gram(grams1, grams2, v, others, k_grid, scale, cfg)
            params = RegularizationParams(lambda1=k1 * scale, lambda2=k2 * scale,
                                          k_grid=tuple(k_grid), cv_folds=reg.cv_folds)
            G1 = grams1.full[np.ix_(others, others)]
            c1 = grams1.full[others, v]
            G2 = grams2.full[np.ix_(others, others)]
            c2 = grams2.full[others, v]
            const = float(grams1.full[v, v]) / 2.0 + float(grams2.full[v, v]) / 2.0
            fit = solve_fused_gram(G1, c1, G2, c2, params, cfg, const_term=const)
            mu1, mu2 = bias_bounds(params.lambda1, params.lambda2, bounds.s_d,
                                   bounds.s_12, n2, bounds.c, bounds.a, bounds.m)
            mu1, mu2 = bounds.capped(mu1, mu2, d, n2)
            M = estimate_m_joint(EmpiricalCovariance(G1, n1),
                                 EmpiricalCovariance(G2, n2),
                                 n1, n2, mu1, mu2, qp_cfg)
            diff = (fit.beta1 - fit.beta2) + M.M1 @ fit.k1 - M.M2 @ fit.k2
            var = ((sig1 ** 2 / n1) * np.einsum("ij,jk,ik->i", M.M1, G1, M.M1)
                   + (sig2 ** 2 / n2) * np.einsum("ij,jk,ik->i", M.M2, G2, M.M2))
            sd = np.sqrt(var)
            B[v, :] = diff / sd
            beta_d[v, :] = diff
            sigma_d[v, :] = sd
            if details is not None:
                details.append(NodeDetail(
                    node=v, noise=NoiseEstimate(sig1, sig2),
                    lambdas=(params.lambda1, params.lambda2),
                    fit=fit, M=M, beta_d=diff, sigma_d=sd))
        except GgmDiffError as exc:
            raise NodeFailure(v, exc) from exc
    return _finalize(B, beta_d, sigma_d, METHOD_FUSED)


def _check_pair(X1: SampleMatrix, X2: SampleMatrix) -> int:
    if X1.p != X2.p:
        raise DimensionMismatch(f"datasets disagree on p: {X1.p} vs {X2.p}")
    if X1.p < 2:
        raise DimensionMismatch("need at least two variables")
    return X1.p


def benjamini_hochberg(pvals: np.ndarray, q: float) -> np.ndarray:
    """Step-up FDR rejection mask over a flat array of p-values."""
    flat = np.asarray(pvals, dtype=np.float64).ravel()
    m = flat.size
    if m == 0:
        raise EmptyInput("no p-values")
    order = np.argsort(flat, kind="stable")
    ranked = flat[order]
    ok = ranked <= q * np.arange(1, m + 1) / m
    out = np.zeros(m, dtype=bool)
    if ok.any():
        kmax = int(np.nonzero(ok)[0].max())
        out[order[:kmax + 1]] = True
    return out.reshape(np.asarray(pvals).shape)


def select_edges(stats: TestStatMatrix, alpha: float, correction: str = "none"
                 ) -> np.ndarray:
    """Boolean rejection matrix at level alpha, optionally BH-corrected."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    mode = correction.lower()
    if mode == "none":
        return stats.pvals < alpha
    if mode == "bh":
        return benjamini_hochberg(stats.pvals, alpha)
    raise ValueError(f"unknown correction {correction!r}")
