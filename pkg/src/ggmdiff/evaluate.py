"""Monte-Carlo evaluation: error rates, coverage, power curves, calibration.

The replicate loops here are the only place the package fans work out to
parallel workers; every task derives its own random stream from the master
seed and a task index, so results do not depend on scheduling or the number
of workers.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import kstest, norm

from .core import RegularizationParams, SampleMatrix, SolverConfig, standardize
from .errors import EmptyInput
from .ggm import (BoundsConfig, CD_DEFAULT_CONFIG, METHOD_FUSED, METHOD_LASSO,
                  TestStatMatrix, nodewise_fused_stats, nodewise_lasso_stats)
from .simulate import GgmPair, generate_ggm_pair, node_truth, sample_dataset


@dataclass(frozen=True)
class ScenarioConfig:
    """Synthetic-experiment shape shared by the benchmarking entry points."""

    p: int = 40
    n1: int = 800
    n2: int = 60
    sparsity: float = 0.19
    diff_sparsity: float = 0.03
    alpha: float = 0.05
    k_grid: tuple = RegularizationParams().k_grid
    cv_folds: int = 3
    bounds: BoundsConfig = BoundsConfig()
    solver: SolverConfig = CD_DEFAULT_CONFIG
    mu_scale: float = 0.1

    def reg(self) -> RegularizationParams:
        return RegularizationParams(k_grid=self.k_grid, cv_folds=self.cv_folds)


@dataclass(frozen=True)
class EvalReport:
    """Table-style summary over replicates for one method."""

    fp_rate: float
    power: float
    coverage_S: float
    coverage_Sdc: float
    len_S: float
    len_Sdc: float
    replicates: int
    method: str


def derive_seed(master: int, *idx: int) -> int:
    """Stable 63-bit child seed from a master seed and task indices."""
    ss = np.random.SeedSequence((int(master),) + tuple(int(i) for i in idx))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)


def difference_mask(truth: GgmPair) -> np.ndarray:
    """P x (P-1) boolean mask of entries testing a true-difference edge."""
    p = truth.p
    mask = np.zeros((p, p - 1), dtype=bool)
    for v in range(p):
        for col in range(p - 1):
            j = col if col < v else col + 1
            mask[v, col] = truth.in_difference(v, j)
    return mask


def true_difference_matrix(truth: GgmPair) -> np.ndarray:
    """Standardized true coefficient differences, aligned with TestStatMatrix."""
    p = truth.p
    T = np.zeros((p, p - 1))
    for v in range(p):
        b1, b2, _, _ = node_truth(truth, v, standardized=True)
        T[v, :] = b1 - b2
    return T


def edge_metrics(stats: TestStatMatrix, truth: GgmPair, alpha: float
                 ) -> tuple[float, float]:
    """(false-positive rate, power) of uncorrected per-entry tests."""
    mask = difference_mask(truth)
    rejected = stats.pvals < alpha
    power = float(rejected[mask].mean()) if mask.any() else 0.0
    fp = float(rejected[~mask].mean()) if (~mask).any() else 0.0
    return fp, power


def coverage_length(stats: TestStatMatrix, truth: GgmPair, alpha: float
                    ) -> tuple[float, float, float, float]:
    """Coverage and mean CI length on the difference support and its complement."""
    mask = difference_mask(truth)
    T = true_difference_matrix(truth)
    half = norm.ppf(1.0 - alpha / 2.0) * stats.sigma_d
    covered = np.abs(stats.beta_d - T) <= half
    cov_S = float(covered[mask].mean()) if mask.any() else 1.0
    cov_Sdc = float(covered[~mask].mean()) if (~mask).any() else 1.0
    len_S = float(2.0 * half[mask].mean()) if mask.any() else 0.0
    len_Sdc = float(2.0 * half[~mask].mean()) if (~mask).any() else 0.0
    return cov_S, cov_Sdc, len_S, len_Sdc


def run_method(method: str, X1: SampleMatrix, X2: SampleMatrix,
               scenario: ScenarioConfig, seed: int,
               details: list | None = None) -> TestStatMatrix:
    cfg = replace(scenario.solver, seed=seed)
    if method == METHOD_LASSO:
        return nodewise_lasso_stats(X1, X2, cfg, scenario.reg(),
                                    mu_scale=scenario.mu_scale, details=details)
    if method == METHOD_FUSED:
        return nodewise_fused_stats(X1, X2, cfg, scenario.reg(),
                                    bounds=scenario.bounds, details=details)
    raise ValueError(f"unknown method {method!r}")


def _replicate_metrics(args) -> dict:
    scenario, methods, master_seed, rep = args
    truth = generate_ggm_pair(scenario.p, scenario.sparsity, scenario.diff_sparsity,
                              derive_seed(master_seed, rep, 0))
    X1, X2 = sample_dataset(truth, scenario.n1, scenario.n2,
                            derive_seed(master_seed, rep, 1))
    out = {}
    for method in methods:
        stats = run_method(method, X1, X2, scenario, derive_seed(master_seed, rep, 2))
        fp, power = edge_metrics(stats, truth, scenario.alpha)
        cov_S, cov_Sdc, len_S, len_Sdc = coverage_length(stats, truth, scenario.alpha)
        out[method] = (fp, power, cov_S, cov_Sdc, len_S, len_Sdc)
    return out


def parallel_map(fn, tasks, threads: int = 1):
    """Order-preserving map, in-process or over a worker pool."""
    tasks = list(tasks)
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks))


def benchmark(scenario: ScenarioConfig, replicates: int, seed: int,
              methods=(METHOD_LASSO, METHOD_FUSED), threads: int = 1
              ) -> dict[str, EvalReport]:
    """Mean Table-style metrics per method over seeded replicates."""
    if replicates < 1:
        raise EmptyInput("need at least one replicate")
    tasks = [(scenario, tuple(methods), seed, rep) for rep in range(replicates)]
    rows = parallel_map(_replicate_metrics, tasks, threads)
    out = {}
    for method in methods:
        vals = np.array([r[method] for r in rows])
        mean = vals.mean(axis=0)
        out[method] = EvalReport(fp_rate=mean[0], power=mean[1], coverage_S=mean[2],
                                 coverage_Sdc=mean[3], len_S=mean[4], len_Sdc=mean[5],
                                 replicates=replicates, method=method)
    return out


@dataclass(frozen=True)
class CurvePoint:
    n2: int
    method: str
    power_mean: float
    power_se: float
    replicates: int


def _curve_task(args) -> tuple:
    scenario, methods, master_seed, n2, rep = args
    sc = replace(scenario, n2=n2)
    truth = generate_ggm_pair(sc.p, sc.sparsity, sc.diff_sparsity,
                              derive_seed(master_seed, n2, rep, 0))
    X1, X2 = sample_dataset(truth, sc.n1, sc.n2, derive_seed(master_seed, n2, rep, 1))
    powers = {}
    for method in methods:
        stats = run_method(method, X1, X2, sc, derive_seed(master_seed, n2, rep, 2))
        _, power = edge_metrics(stats, truth, sc.alpha)
        powers[method] = power
    return n2, powers


def power_curve(scenario: ScenarioConfig, n2_grid, replicates: int, seed: int,
                methods=(METHOD_LASSO, METHOD_FUSED), threads: int = 1
                ) -> list[CurvePoint]:
    """Mean power (with standard error) per n2 grid point and method."""
    n2_grid = list(n2_grid)
    if not n2_grid:
        raise EmptyInput("empty n2 grid")
    tasks = [(scenario, tuple(methods), seed, n2, rep)
             for n2 in n2_grid for rep in range(replicates)]
    rows = parallel_map(_curve_task, tasks, threads)
    points = []
    for n2 in n2_grid:
        sub = [powers for (m, powers) in rows if m == n2]
        for method in methods:
            vals = np.array([s[method] for s in sub])
            se = float(vals.std(ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0
            points.append(CurvePoint(n2=n2, method=method,
                                     power_mean=float(vals.mean()), power_se=se,
                                     replicates=len(vals)))
    return points


def _perm_task(args) -> np.ndarray:
    pooled, n1, method, scenario, master_seed, k = args
    rng = np.random.default_rng(derive_seed(master_seed, k))
    order = rng.permutation(pooled.shape[0])
    A = standardize(pooled[order[:n1]])
    B = standardize(pooled[order[n1:]])
    stats = run_method(method, A, B, scenario, derive_seed(master_seed, k, 1))
    return np.abs(stats.B)


def permutation_test(X1: SampleMatrix, X2: SampleMatrix, method: str,
                     n_perms: int, seed: int,
                     scenario: ScenarioConfig | None = None,
                     threads: int = 1) -> np.ndarray:
    """Permutation p-values per entry from re-splitting the pooled rows.

    Uses the add-one estimator (1 + #{perm >= observed}) / (n_perms + 1), so
    p-values are valid and never exactly zero.
    """
    if n_perms < 19:
        raise ValueError("need at least 19 permutations")
    if scenario is None:
        scenario = ScenarioConfig(p=X1.p, n1=X1.n, n2=X2.n)
    observed = np.abs(run_method(method, X1, X2, scenario, derive_seed(seed, 0, 1)).B)
    pooled = np.vstack([X1.data, X2.data])
    tasks = [(pooled, X1.n, method, scenario, seed, k + 1) for k in range(n_perms)]
    perms = parallel_map(_perm_task, tasks, threads)
    exceed = np.zeros_like(observed)
    for pb in perms:
        exceed += (pb >= observed)
    return (1.0 + exceed) / (n_perms + 1.0)


@dataclass(frozen=True)
class NullCalibration:
    """Pooled null z statistics with tail mass and KS distance to N(0,1)."""

    z: np.ndarray
    tail_fraction: float
    ks_distance: float
    replicates: int

    @staticmethod
    def from_pool(z: np.ndarray, replicates: int) -> "NullCalibration":
        z = np.asarray(z, dtype=np.float64).ravel()
        if z.size == 0:
            raise EmptyInput("no pooled statistics")
        tail = float(np.mean(np.abs(z) > 1.96))
        ks = float(kstest(z, "norm").statistic)
        return NullCalibration(z=z, tail_fraction=tail, ks_distance=ks,
                               replicates=replicates)


def _null_task(args) -> np.ndarray:
    scenario, method, master_seed, rep = args
    truth = generate_ggm_pair(scenario.p, scenario.sparsity, 0.0,
                              derive_seed(master_seed, rep, 0))
    X1, X2 = sample_dataset(truth, scenario.n1, scenario.n2,
                            derive_seed(master_seed, rep, 1))
    stats = run_method(method, X1, X2, scenario, derive_seed(master_seed, rep, 2))
    return stats.B.ravel()


def null_calibration(scenario: ScenarioConfig, replicates: int, seed: int,
                     method: str = METHOD_FUSED, threads: int = 1) -> NullCalibration:
    """Distribution summary of z statistics when the two models are identical."""
    if replicates < 1:
        raise EmptyInput("need at least one replicate")
    tasks = [(scenario, method, seed, rep) for rep in range(replicates)]
    pools = parallel_map(_null_task, tasks, threads)
    return NullCalibration.from_pool(np.concatenate(pools), replicates)
