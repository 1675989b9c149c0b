import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import skysift as sk
from skysift.errors import ConfigError
from skysift.kms import (
    KmsMatrix,
    kms_cholesky_factor,
    kms_inverse_apply,
    kms_logdet,
    kms_quadratic_form,
)


def test_inverse_apply_hand_case():
    # dim 3, alpha=1, rho=0.5, v = e0: first row of the tridiagonal inverse
    m = KmsMatrix(alpha=1.0, rho=0.5, dim=3)
    out = kms_inverse_apply(m, np.array([1.0, 0.0, 0.0]))
    np.testing.assert_allclose(out, [4.0 / 3.0, -2.0 / 3.0, 0.0], rtol=1e-15)


def test_quadratic_form_hand_case():
    m = KmsMatrix(alpha=1.0, rho=0.5, dim=2)
    assert kms_quadratic_form(m, np.array([1.0, 1.0])) == pytest.approx(
        4.0 / 3.0, rel=1e-15
    )


def test_logdet_frozen_value():
    m = KmsMatrix(alpha=0.5, rho=math.exp(-0.5), dim=20)
    value = kms_logdet(m)
    assert value == pytest.approx(-22.57777137355346, abs=1e-12)
    assert value == pytest.approx(20 * math.log(0.5) + 19 * math.log1p(-math.exp(-1.0)))


@pytest.mark.parametrize("dim", [1, 2, 3, 7, 19, 40])
def test_matches_dense_oracles(dim):
    rng = np.random.default_rng(dim)
    for _ in range(3):
        alpha = float(rng.uniform(0.05, 5.0))
        rho = float(rng.uniform(0.05, 0.95))
        m = KmsMatrix(alpha=alpha, rho=rho, dim=dim)
        cov = sk.covariance_matrix(sk.ClassStatistics(alpha=alpha, rho=rho), dim)
        v = rng.normal(size=dim)

        dense_solve = np.linalg.solve(cov, v)
        np.testing.assert_allclose(kms_inverse_apply(m, v), dense_solve, rtol=1e-10, atol=1e-12)
        assert kms_logdet(m) == pytest.approx(np.linalg.slogdet(cov)[1], rel=1e-12)
        assert kms_quadratic_form(m, v) == pytest.approx(float(v @ dense_solve), rel=1e-10)


def test_inverse_apply_matrix_argument():
    m = KmsMatrix(alpha=0.8, rho=0.3, dim=5)
    cols = np.random.default_rng(0).normal(size=(5, 4))
    batched = kms_inverse_apply(m, cols)
    for j in range(4):
        np.testing.assert_array_equal(batched[:, j], kms_inverse_apply(m, cols[:, j]))


def test_inverse_apply_is_true_inverse():
    m = KmsMatrix(alpha=0.8, rho=0.3, dim=6)
    cov = sk.covariance_matrix(sk.ClassStatistics(alpha=0.8, rho=0.3), 6)
    np.testing.assert_allclose(cov @ kms_inverse_apply(m, np.eye(6)), np.eye(6), atol=1e-14)


def test_cholesky_factor():
    m = KmsMatrix(alpha=0.5, rho=math.exp(-0.5), dim=8)
    lower = kms_cholesky_factor(m)
    assert np.array_equal(lower, np.tril(lower))
    cov = sk.covariance_matrix(sk.ClassStatistics(alpha=m.alpha, rho=m.rho), 8)
    np.testing.assert_allclose(lower @ lower.T, cov, atol=1e-15)
    # positive diagonal makes the factor unique, so it matches the dense one
    np.testing.assert_allclose(lower, np.linalg.cholesky(cov), atol=1e-14)


def test_dim_one_collapses():
    m = KmsMatrix(alpha=0.25, rho=0.5, dim=1)
    np.testing.assert_array_equal(kms_inverse_apply(m, np.array([2.0])), [8.0])
    assert kms_quadratic_form(m, np.array([2.0])) == 16.0
    assert kms_logdet(m) == math.log(0.25)


def test_shape_validation():
    m = KmsMatrix(alpha=1.0, rho=0.5, dim=3)
    with pytest.raises(ConfigError):
        kms_inverse_apply(m, np.zeros(4))
    with pytest.raises(ConfigError):
        kms_quadratic_form(m, np.zeros((3, 2)))


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(alpha=0.0, rho=0.5, dim=3),
        dict(alpha=1.0, rho=1.0, dim=3),
        dict(alpha=1.0, rho=-0.2, dim=3),
        dict(alpha=1.0, rho=0.5, dim=0),
        dict(alpha=1.0, rho=0.5, dim=2.0),
    ],
)
def test_constructor_validation(kwargs):
    with pytest.raises(ConfigError):
        KmsMatrix(**kwargs)


@settings(max_examples=60, deadline=None)
@given(
    alpha=st.floats(1e-3, 1e3),
    rho=st.floats(1e-6, 1.0 - 1e-6, exclude_max=True),
    dim=st.integers(1, 30),
    seed=st.integers(0, 2**31),
)
def test_quadratic_form_positive_definite(alpha, rho, dim, seed):
    v = np.random.default_rng(seed).normal(size=dim)
    m = KmsMatrix(alpha=alpha, rho=rho, dim=dim)
    form = kms_quadratic_form(m, v)
    assert form > 0.0
    assert form == pytest.approx(float(v @ kms_inverse_apply(m, v)), rel=1e-9)
