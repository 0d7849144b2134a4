import numpy as np
import pytest

from ggmdiff.core import covariance, standardize
from ggmdiff.errors import ConstantColumn, NonFiniteInput


def test_fixed_point_column():
    out = standardize(np.array([[1.0], [-1.0]]))
    assert np.allclose(out.data, [[1.0], [-1.0]])


def test_affine_column():
    # subtract mean 1, divide by RMS 1
    out = standardize(np.array([[2.0], [0.0]]))
    assert np.allclose(out.data, [[1.0], [-1.0]])


def test_constant_column_rejected():
    with pytest.raises(ConstantColumn) as ei:
        standardize(np.array([[5.0], [5.0], [5.0]]))
    assert ei.value.column == 0


def test_nonfinite_rejected():
    bad = np.array([[1.0, 2.0], [np.nan, 0.0]])
    with pytest.raises(NonFiniteInput):
        standardize(bad)
    bad[1, 0] = np.inf
    with pytest.raises(NonFiniteInput):
        standardize(bad)


def test_standardized_invariants():
    rng = np.random.default_rng(0)
    X = standardize(rng.normal(2.0, 3.0, size=(37, 5)))
    assert np.abs(X.data.mean(axis=0)).max() < 1e-10
    assert np.abs((X.data**2).mean(axis=0) - 1).max() < 1e-10


def test_standardize_idempotent():
    rng = np.random.default_rng(1)
    X = standardize(rng.normal(size=(23, 4)) * 5 + 1)
    again = standardize(X.data)
    assert np.abs(again.data - X.data).max() < 1e-10


def test_covariance_orthonormal_design():
    # columns of a Hadamard matrix: X'X/n is exactly the identity
    H = np.array([[1, 1, 1], [-1, 1, -1], [1, -1, -1], [-1, -1, 1]], dtype=float)
    cov = covariance(standardize(H))
    assert np.allclose(cov.sigma_hat, np.eye(3), atol=1e-12)


def test_covariance_single_column():
    rng = np.random.default_rng(2)
    cov = covariance(standardize(rng.normal(size=(11, 1))))
    assert cov.sigma_hat.shape == (1, 1)
    assert abs(cov.sigma_hat[0, 0] - 1.0) < 1e-10


def test_covariance_offdiagonal_matches_direct_multiply():
    rng = np.random.default_rng(3)
    X = standardize(rng.normal(size=(19, 2)))
    cov = covariance(X)
    direct = float(X.data[:, 0] @ X.data[:, 1]) / X.n
    assert abs(cov.sigma_hat[0, 1] - direct) < 1e-12
    assert abs(cov.sigma_hat[0, 1] - cov.sigma_hat[1, 0]) < 1e-15


def test_covariance_diag_is_one():
    rng = np.random.default_rng(4)
    cov = covariance(standardize(rng.normal(size=(30, 6))))
    assert np.abs(np.diag(cov.sigma_hat) - 1).max() < 1e-10


def test_covariance_row_permutation_invariant():
    rng = np.random.default_rng(5)
    X = standardize(rng.normal(size=(25, 4)))
    perm = rng.permutation(25)
    cov_a = covariance(X)
    cov_b = covariance(standardize(X.data[perm]))
    assert np.abs(cov_a.sigma_hat - cov_b.sigma_hat).max() < 1e-12


def test_covariance_psd():
    rng = np.random.default_rng(6)
    cov = covariance(standardize(rng.normal(size=(40, 8))))
    assert np.linalg.eigvalsh(cov.sigma_hat).min() > -1e-8
