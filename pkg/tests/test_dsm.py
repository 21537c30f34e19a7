import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from manifold_langevin.dsm import (
    FeatureConfig,
    FeatureMap,
    ScoreModel,
    dsm_empirical_loss,
    dsm_population_loss,
    fit_score_model,
    perturb_oracle,
    score_error,
)
from manifold_langevin.errors import ParameterError, SingularityError
from manifold_langevin.geometry import Circle, PhaseTorus, Sphere
from manifold_langevin.target import (
    CircleProductOracle,
    GaussianOracle,
    QuadratureOracle,
    make_oracle,
    uniform_target,
)

LINEAR = FeatureConfig(n_centers=0, constant=False)


def zero(y):
    return np.zeros_like(y)


# empirical loss


def test_empirical_loss_plug_in():
    assert dsm_empirical_loss(zero, [[0.0, 0.0]], 1.0, noise=[[1.0, 0.0]]) == 1.0
    with pytest.raises(ParameterError):
        dsm_empirical_loss(zero, np.empty((0, 2)), 1.0)
    with pytest.raises(ParameterError):
        dsm_empirical_loss(zero, [[0.0, 0.0]], 0.0)


def test_empirical_loss_of_zero_score_concentrates():
    data = np.random.default_rng(0).uniform(-3, 3, (10_000, 2))
    assert dsm_empirical_loss(zero, data, 1.0, seed=1) == pytest.approx(2.0, rel=0.05)


def test_empirical_loss_at_gaussian_optimum():
    sigma = 1.0
    data = np.random.default_rng(2).standard_normal((100_000, 2))
    loss = dsm_empirical_loss(lambda y: -y / (1 + sigma**2), data, sigma, seed=3)
    assert loss == pytest.approx(2 / (sigma**2 * (1 + sigma**2)), rel=0.05)


# population loss and score error


def test_population_loss_of_exact_score_is_zero():
    oracle = make_oracle(Circle())
    est = dsm_population_loss(oracle, oracle, 0.5, probes=512)
    assert est.loss == 0.0
    assert score_error(oracle, oracle, 0.5, probes=512) == 0.0


def test_population_loss_of_constant_offset():
    oracle = make_oracle(Circle())
    c = np.array([0.3, -0.4])
    est = dsm_population_loss(lambda y: oracle.score(y, 0.5) + c, oracle, 0.5, probes=1024)
    assert abs(est.loss - 0.25) <= 3 * est.stderr + 1e-12
    assert score_error(lambda y: oracle.score(y, 0.5) + c, oracle, 0.5) == pytest.approx(0.5)


def test_fitted_error_decreases_with_data_on_circle():
    oracle = make_oracle(Circle())
    sigma = 0.5
    errors = []
    for seed in range(5):
        fmap = FeatureMap.from_data(oracle.sample_prior(2000, [seed, 77]), FeatureConfig(seed=seed))
        full = oracle.sample_prior(10_000, [seed, 1])
        errors.append([
            score_error(fit_score_model(full[:n], [sigma], seed=seed, feature_map=fmap), oracle, sigma,
                        seed=100 + seed)
            for n in (1000, 10_000)
        ])
    med = np.median(errors, axis=0)
    assert med[1] <= med[0]


# fitting


def test_gaussian_coefficients():
    sigma = 1.0
    data = np.random.default_rng(4).standard_normal((100_000, 2))
    model = fit_score_model(data, [sigma], LINEAR)
    np.testing.assert_allclose(model.coefs[0], -0.5 * np.eye(2), atol=0.01)


def test_gaussian_coefficient_error_shrinks_like_inverse_root_n():
    sigma = 1.0
    errs = []
    for seed in range(5):
        data = np.random.default_rng([seed, 5]).standard_normal((100_000, 2))
        errs.append([
            fit_score_model(data[:n], [sigma], LINEAR, seed=seed).coefs[0] + 0.5 * np.eye(2)
            for n in (1000, 10_000, 100_000)
        ])
    rms = np.sqrt(np.mean(np.square(errs), axis=(0, 2, 3)))
    # 1/sqrt(n) predicts a factor sqrt(10) ~ 3.16 per decade
    ratios = rms[:-1] / rms[1:]
    assert np.all((ratios > 2) & (ratios < 5))


def test_point_mass_data():
    y0 = np.array([1.0, -2.0])
    sigma = 1.0
    model = fit_score_model(np.tile(y0, (5000, 1)), [sigma], FeatureConfig(n_centers=0))
    probes = y0 + 0.3 * np.random.default_rng(6).standard_normal((50, 2))
    expected = (y0 - probes) / sigma**2
    assert np.max(np.linalg.norm(model(probes, sigma) - expected, axis=1)
                  / np.linalg.norm(expected, axis=1)) < 0.05


def test_underdetermined_fit_is_singular():
    data = np.random.default_rng(7).standard_normal((3, 2))
    with pytest.raises(SingularityError):
        fit_score_model(data, [0.5], FeatureConfig(n_centers=50), ridge=0.0)
    fit_score_model(data, [0.5], FeatureConfig(n_centers=50), ridge=1e-3)


def test_one_block_per_level_and_unknown_level():
    data = np.random.default_rng(8).standard_normal((200, 2))
    model = fit_score_model(data, [1.0, 0.5, 0.1], FeatureConfig(n_centers=8))
    assert len(model.coefs) == 3 and model.dim == 2
    assert model(np.zeros(2), 0.5).shape == (2,)
    with pytest.raises(ParameterError):
        model(np.zeros(2), 0.3)


def test_model_json_roundtrip():
    data = np.random.default_rng(9).standard_normal((300, 3))
    model = fit_score_model(data, [1.0, 0.2], FeatureConfig(n_centers=10, seed=3))
    back = ScoreModel.from_json(model.to_json())
    y = np.random.default_rng(10).standard_normal((20, 3))
    for s in (1.0, 0.2):
        np.testing.assert_array_equal(back(y, s), model(y, s))
    linear = fit_score_model(data, [1.0], LINEAR)
    np.testing.assert_array_equal(ScoreModel.from_json(linear.to_json())(y, 1.0), linear(y, 1.0))
    with pytest.raises(ParameterError):
        ScoreModel.from_json('{"format": "other"}')


@settings(max_examples=30, deadline=None)
@given(st.integers(5, 200), st.floats(0.05, 2.0), st.integers(0, 2**16), st.integers(0, 12))
def test_fit_never_worse_than_zero_model(n, sigma, seed, centers):
    # evaluated on the exact noise draw used by the fit, where the fit is optimal
    data = np.random.default_rng(seed).standard_normal((n, 2)) * 2
    model = fit_score_model(data, [sigma], FeatureConfig(n_centers=centers), ridge=1e-4, seed=seed)
    noise = np.random.default_rng([seed, 0]).standard_normal(data.shape)
    fitted = dsm_empirical_loss(model, data, sigma, noise=noise)
    assert fitted <= dsm_empirical_loss(zero, data, sigma, noise=noise) * (1 + 1e-9)


# perturbed oracles


def test_zero_perturbation_is_bit_identical():
    base = make_oracle(Circle())
    pert = perturb_oracle(base, 0.0, seed=3)
    x = np.random.default_rng(11).standard_normal((100, 2))
    np.testing.assert_array_equal(pert.score(x, 0.5), base.score(x, 0.5))


def test_perturbation_size_on_circle():
    base = make_oracle(Circle())
    assert 0.4 <= score_error(perturb_oracle(base, 0.5, seed=1), base, 0.5) <= 0.6
    with pytest.raises(ParameterError):
        perturb_oracle(base, -0.1)


def test_perturbation_field_is_reproducible():
    base = make_oracle(Circle())
    x = np.random.default_rng(12).standard_normal((10, 2))
    a, b = perturb_oracle(base, 1.0, seed=5), perturb_oracle(base, 1.0, seed=5)
    np.testing.assert_array_equal(a.score(x, 0.3), b.score(x, 0.3))
    assert not np.array_equal(a.score(x, 0.3), perturb_oracle(base, 1.0, seed=6).score(x, 0.3))


@pytest.mark.parametrize("name", ["circle", "sphere", "phase_torus", "gaussian", "point_mass"])
def test_perturbation_composes_with_score_error(name):
    base = {
        "circle": lambda: make_oracle(Circle(ambient_dim=3)),
        "sphere": lambda: QuadratureOracle(uniform_target(Sphere(), 32)),
        "phase_torus": lambda: make_oracle(PhaseTorus(length=8)),
        "gaussian": lambda: GaussianOracle(np.zeros(2)),
        "point_mass": lambda: CircleProductOracle.point_mass(np.array([0.5, 1.0])),
    }[name]()
    for eps in (0.1, 0.5, 1.0):
        for sigma in (0.1, 0.5):
            err = score_error(perturb_oracle(base, eps, seed=2), base, sigma, probes=2048)
            assert 0.8 * eps <= err <= 1.2 * eps
            assert math.isfinite(err)
