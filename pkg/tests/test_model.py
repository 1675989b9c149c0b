import dataclasses
import json
import math

import numpy as np
import pytest

import skysift as sk
from skysift.errors import ConfigError
from skysift.model import class_statistics, continuous_autocorrelation, covariance_matrix


def test_default_scenario_statistics():
    s = sk.Scenario.default()
    st1, st2 = s.stats1(), s.stats2()
    assert st1.alpha == 0.5
    assert st1.rho == math.exp(-0.5)
    assert st2.alpha == 1.0 / 6.0
    assert st2.rho == math.exp(-1.5)


def test_class_statistics_formula():
    params = sk.IntruderParams(mass=2.0, gain=3.0, label=1)
    noise = sk.NoiseSpec(intensity=0.7)
    sampling = sk.SamplingSpec(period=0.4, horizon=5, prior1=0.5)
    st = class_statistics(params, noise, sampling)
    assert st.alpha == 0.7 / 12.0
    assert st.rho == math.exp(-1.5 * 0.4)


def test_covariance_matrix_entries():
    st = sk.ClassStatistics(alpha=0.5, rho=0.6065)
    cov = covariance_matrix(st, 4)
    assert cov.shape == (4, 4)
    for i in range(4):
        for j in range(4):
            assert cov[i, j] == pytest.approx(0.5 * 0.6065 ** abs(i - j), rel=1e-15)
    assert np.array_equal(cov, cov.T)
    np.linalg.cholesky(cov)  # positive definite


def test_covariance_matrix_small_cases():
    st = sk.ClassStatistics(alpha=0.5, rho=0.6065)
    np.testing.assert_allclose(covariance_matrix(st, 1), [[0.5]])
    two = covariance_matrix(st, 2)
    assert two[0, 1] == pytest.approx(0.30325, rel=1e-12)
    with pytest.raises(ConfigError):
        covariance_matrix(st, 0)


def test_continuous_autocorrelation():
    params = sk.IntruderParams(mass=1.0, gain=1.0, label=1)
    noise = sk.NoiseSpec(intensity=1.0)
    assert continuous_autocorrelation(params, noise, 0.0) == 0.5
    # even in the lag
    assert continuous_autocorrelation(params, noise, -0.5) == continuous_autocorrelation(
        params, noise, 0.5
    )
    assert continuous_autocorrelation(params, noise, 0.5) == pytest.approx(
        0.30327, rel=1e-4
    )


def test_continuous_autocorrelation_matches_sampled_covariance():
    s = sk.Scenario.default()
    cov = covariance_matrix(s.stats1(), 5)
    T = s.sampling.period
    for lag in range(5):
        expected = continuous_autocorrelation(s.intruder1, s.noise, lag * T)
        assert cov[0, lag] == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(mass=0.0, gain=1.0, label=1),
        dict(mass=-1.0, gain=1.0, label=1),
        dict(mass=1.0, gain=0.0, label=1),
        dict(mass=math.inf, gain=1.0, label=1),
        dict(mass=1.0, gain=1.0, label=3),
    ],
)
def test_intruder_params_validation(kwargs):
    with pytest.raises(ConfigError):
        sk.IntruderParams(**kwargs)


def test_noise_and_sampling_validation():
    with pytest.raises(ConfigError):
        sk.NoiseSpec(intensity=0.0)
    with pytest.raises(ConfigError):
        sk.SamplingSpec(period=0.0, horizon=5, prior1=0.5)
    with pytest.raises(ConfigError):
        sk.SamplingSpec(period=0.5, horizon=0, prior1=0.5)
    with pytest.raises(ConfigError):
        sk.SamplingSpec(period=0.5, horizon=5, prior1=1.0)
    with pytest.raises(ConfigError):
        sk.SamplingSpec(period=0.5, horizon=5, prior1=0.0)


def test_class_statistics_validation():
    with pytest.raises(ConfigError):
        sk.ClassStatistics(alpha=0.0, rho=0.5)
    with pytest.raises(ConfigError):
        sk.ClassStatistics(alpha=1.0, rho=1.0)
    with pytest.raises(ConfigError):
        sk.ClassStatistics(alpha=1.0, rho=0.0)


def test_prior2_property():
    sampling = sk.SamplingSpec(period=0.5, horizon=5, prior1=0.3)
    assert sampling.prior2 == 0.7


def test_scenario_dict_roundtrip():
    s = sk.Scenario.default()
    d = s.to_dict()
    assert d == {
        "m1": 1.0,
        "k1": 1.0,
        "m2": 1.0,
        "k2": 3.0,
        "q": 1.0,
        "T": 0.5,
        "kf": 20,
        "prior1": 0.5,
    }
    again = sk.Scenario.from_dict(d)
    assert again.to_dict() == d


def test_scenario_partial_dict_uses_defaults():
    s = sk.Scenario.from_dict({"kf": 7, "prior1": 0.25})
    assert s.sampling.horizon == 7
    assert s.sampling.prior1 == 0.25
    assert s.intruder2.gain == 3.0


@pytest.mark.parametrize(
    "raw",
    [
        {"horizon": 20},  # unknown key (typo guard)
        {"kf": 2.5},
        {"kf": True},
        {"kf": "20x"},
        {"m1": "heavy"},
        {"q": True},
        {"prior1": 1.5},
    ],
)
def test_scenario_from_dict_rejects(raw):
    with pytest.raises(ConfigError):
        sk.Scenario.from_dict(raw)


def test_scenario_from_json(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"m2": 2.0, "kf": 10}), encoding="utf-8")
    s = sk.Scenario.from_json(path)
    assert s.intruder2.mass == 2.0
    assert s.sampling.horizon == 10

    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        sk.Scenario.from_json(bad)
    with pytest.raises(ConfigError):
        sk.Scenario.from_json(tmp_path / "missing.json")
    array = tmp_path / "array.json"
    array.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigError):
        sk.Scenario.from_json(array)


def test_model_types_are_immutable():
    s = sk.Scenario.default()
    with pytest.raises(dataclasses.FrozenInstanceError):
        s.intruder1.mass = 2.0
    with pytest.raises(dataclasses.FrozenInstanceError):
        s.sampling.prior1 = 0.9
