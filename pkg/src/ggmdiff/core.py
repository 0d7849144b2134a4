"""Shared numeric containers: standardized samples, covariances, solver knobs.

All containers are immutable after construction and safe to share across
parallel workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConstantColumn, DimensionMismatch, NonFiniteInput

DEFAULT_K_GRID = tuple(np.logspace(-1.0, 2.0, 10))


@dataclass(frozen=True)
class SampleMatrix:
    """An n x p data matrix whose columns are mean-zero with unit second moment."""

    data: np.ndarray
    standardized: bool = True

    def __post_init__(self):
        object.__setattr__(self, "data", np.asarray(self.data, dtype=np.float64))
        if self.data.ndim != 2:
            raise DimensionMismatch(f"expected 2-d data, got shape {self.data.shape}")

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class EmpiricalCovariance:
    """Second-moment matrix X'X/n of a standardized sample."""

    sigma_hat: np.ndarray
    n: int

    def __post_init__(self):
        object.__setattr__(self, "sigma_hat", np.asarray(self.sigma_hat, dtype=np.float64))
        s = self.sigma_hat
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise DimensionMismatch(f"covariance must be square, got {s.shape}")

    @property
    def p(self) -> int:
        return self.sigma_hat.shape[0]

    def submatrix(self, keep: np.ndarray) -> np.ndarray:
        """Principal submatrix for the given index array (no recomputation)."""
        return self.sigma_hat[np.ix_(keep, keep)]


@dataclass(frozen=True)
class RegularizationParams:
    """Penalty levels and the cross-validation grid used to pick them."""

    lambda1: float = 0.0
    lambda2: float = 0.0
    k_grid: tuple = DEFAULT_K_GRID
    cv_folds: int = 3

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("penalty levels must be nonnegative")
        if len(self.k_grid) == 0 or min(self.k_grid) <= 0:
            raise ValueError("k_grid must be nonempty and strictly positive")
        if self.cv_folds < 2:
            raise ValueError("cv_folds must be at least 2")
        object.__setattr__(self, "k_grid", tuple(float(k) for k in self.k_grid))


@dataclass(frozen=True)
class SolverConfig:
    """Iteration budget, tolerance and master seed shared by the solvers."""

    max_iter: int = 50_000
    tol: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


def standardize(raw: np.ndarray) -> SampleMatrix:
    """Center each column and scale to unit root mean square.

    The 1/n scaling (not 1/(n-1)) makes the empirical second moment of every
    column exactly one, which the penalty calibrations assume.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 2:
        raise DimensionMismatch(f"expected 2-d input, got shape {raw.shape}")
    if not np.all(np.isfinite(raw)):
        raise NonFiniteInput("input contains NaN or inf")
    n = raw.shape[0]
    if n < 2:
        raise DimensionMismatch("need at least 2 samples to standardize")
    centered = raw - raw.mean(axis=0)
    rms = np.sqrt(np.mean(centered**2, axis=0))
    zero = np.nonzero(rms == 0.0)[0]
    if zero.size:
        raise ConstantColumn(int(zero[0]))
    return SampleMatrix(centered / rms, standardized=True)


def covariance(X: SampleMatrix) -> EmpiricalCovariance:
    """Empirical second-moment matrix X'X/n, symmetrized against roundoff."""
    if not X.standardized:
        raise ValueError("covariance expects a standardized sample")
    s = X.data.T @ X.data / X.n
    s = 0.5 * (s + s.T)
    return EmpiricalCovariance(sigma_hat=s, n=X.n)
