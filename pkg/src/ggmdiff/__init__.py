"""Difference testing for Gaussian graphical models.

Estimates and tests per-edge differences between two GGMs through nodewise
debiased lasso and debiased multi-task fused lasso regressions, with
Monte-Carlo benchmarking utilities and a command-line front end.
"""

__version__ = "0.1.0"

from .core import (EmpiricalCovariance, RegularizationParams, SampleMatrix,
                   SolverConfig, covariance, standardize)
from .debias import (DebiasMatrices, DebiasedDifference, bias_bounds,
                     debias_difference, debias_single, empirical_delta,
                     estimate_m_joint, estimate_m_single, variance_difference)
from .evaluate import (CurvePoint, EvalReport, NullCalibration, ScenarioConfig,
                       benchmark, coverage_length, edge_metrics,
                       null_calibration, permutation_test, power_curve)
from .fused import FusedFit, basic_inequality_gap, solve_fused
from .ggm import (BoundsConfig, METHOD_FUSED, METHOD_LASSO, NoiseEstimate,
                  TestStatMatrix, benjamini_hochberg, cross_validate_fused,
                  cross_validate_lasso, estimate_noise, nodewise_fused_stats,
                  nodewise_lasso_stats, select_edges)
from .lasso import LassoFit, solve_lasso, subgradient
from .qp import BoxConstrainedQp, QpHandle, QpSolution, solve_qp
from .simulate import GgmPair, generate_ggm_pair, node_truth, sample_dataset

__all__ = [
    "BoundsConfig", "BoxConstrainedQp", "CurvePoint", "DebiasMatrices",
    "DebiasedDifference", "EmpiricalCovariance", "EvalReport", "FusedFit",
    "GgmPair", "LassoFit", "METHOD_FUSED", "METHOD_LASSO", "NoiseEstimate",
    "NullCalibration", "QpHandle", "QpSolution", "RegularizationParams",
    "SampleMatrix", "ScenarioConfig", "SolverConfig", "TestStatMatrix",
    "basic_inequality_gap", "benchmark", "benjamini_hochberg", "bias_bounds",
    "coverage_length", "covariance", "cross_validate_fused",
    "cross_validate_lasso", "debias_difference", "debias_single",
    "edge_metrics", "empirical_delta", "estimate_m_joint", "estimate_m_single",
    "estimate_noise", "generate_ggm_pair", "node_truth", "nodewise_fused_stats",
    "nodewise_lasso_stats", "null_calibration", "permutation_test",
    "power_curve", "sample_dataset", "select_edges", "solve_fused",
    "solve_lasso", "solve_qp", "standardize", "subgradient",
    "variance_difference",
]
