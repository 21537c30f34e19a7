import inspect
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import log as mp_log

import bound_oracle as oracle
from manifold_langevin.bounds import (
    bounds_for_manifold,
    cls_convolved,
    cls_gaussian,
    cls_general_log,
    cls_uniform_log,
    diameter_bound,
    smoothed_score_constants,
    spectral_gap_bound,
    sampling_error_argmin,
    sampling_error_bound,
    sampling_error_terms,
    w2_decay_bound,
)
from manifold_langevin.errors import DomainError, ParameterError
from manifold_langevin.geometry import EmbeddedTorus, build_mesh, summarize

BOUND_EXAMPLE = dict(sigma=0.1, d=4, w0=1.0, c_ls=2.0, eps=0.01, b=1.0, L=1.0, p_inf=1.0, C=1.0)


# elementary constants


def test_gaussian_and_convolved_constants():
    assert cls_gaussian(1.0) == 2.0
    assert cls_gaussian(0.1) == pytest.approx(0.02)
    assert cls_gaussian(0.0) == 0.0
    assert cls_convolved(0.0, 1.0) == 2.0
    assert cls_convolved(3.0, 0.1) == pytest.approx(3.02)
    # tight for Gaussians: N(0, I) smoothed is N(0, (1 + sigma^2) I)
    for sigma in (0.1, 0.5, 2.0):
        assert cls_convolved(cls_gaussian(1.0), sigma) == pytest.approx(2 * (1 + sigma**2))


def test_smoothed_score_constants():
    assert smoothed_score_constants(1.0, 0.5) == (16.0, 2.0, 2.0)
    assert smoothed_score_constants(0.0, 1.0) == (1.0, 0.5, 0.0)
    assert smoothed_score_constants(2.0, 1.0) == (4.0, 0.5, 2.0)
    with pytest.raises(ParameterError):
        smoothed_score_constants(1.0, 0.0)


def test_decay_bound():
    assert w2_decay_bound(0.7, 2.0, 0.0) == 0.7
    assert w2_decay_bound(1.0, 2.0, 1.0) == pytest.approx(math.exp(-1))
    for t in (0.3, 1.0, 4.0):
        assert w2_decay_bound(1.0, 1.0, t) == pytest.approx(w2_decay_bound(1.0, 2.0, t) ** 2)
    with pytest.raises(ParameterError):
        w2_decay_bound(1.0, 0.0, 1.0)


# diameter and spectral gap


@pytest.mark.parametrize("kappa, expected", [(4.0, 146.75), (40.0, 172.80)])
def test_diameter_examples(kappa, expected):
    value = diameter_bound(2.0, 2, kappa)
    assert value == pytest.approx(expected, abs=0.005)
    assert value == pytest.approx(float(oracle.diameter(2, 2, kappa)), rel=1e-13)


def test_diameter_clamps_at_two_pi():
    assert diameter_bound(2.0, 2, 1e-6) == 2 * math.pi


def test_diameter_domain():
    with pytest.raises(DomainError):
        diameter_bound(0.5, 2, 4.0)
    assert diameter_bound(0.5, 2, 4.0, allow_out_of_domain=True) > 2 * math.pi
    with pytest.raises(DomainError):
        diameter_bound(2.0, 1, 4.0)
    with pytest.raises(DomainError):
        diameter_bound(2.0, 2, 0.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(1.0001, 50), st.integers(2, 10), st.floats(1e-8, 1e6))
def test_diameter_at_least_two_pi_and_matches_oracle(K, dprime, kappa):
    value = diameter_bound(K, dprime, kappa)
    assert value >= 2 * math.pi
    assert value == pytest.approx(float(oracle.diameter(K, dprime, kappa)), rel=1e-12)


def test_diameter_bound_dominates_measured_torus_diameter():
    m = EmbeddedTorus()
    s = summarize(m, build_mesh(m, 32))
    assert diameter_bound(s.K_eff, s.intrinsic_dim, s.kappa, allow_out_of_domain=True) >= s.diameter_empirical


def test_spectral_gap_examples():
    assert spectral_gap_bound(1.0, 2, math.pi) == pytest.approx(math.pi / 2)
    assert math.exp(spectral_gap_bound(1.0, 2, math.pi)) == pytest.approx(4.810, abs=5e-4)
    assert spectral_gap_bound(1.0, 2, 0.0) == -math.inf
    assert spectral_gap_bound(0.0, 2, 2.0) == pytest.approx(-0.9032, abs=5e-5)
    assert spectral_gap_bound(3.0, 4, 7.0) == pytest.approx(float(mp_log(oracle.inv_gap(3, 4, 7))), rel=1e-13)


# log-Sobolev bounds


@pytest.mark.parametrize("K, L, B, expected", [(1.0, 0.0, 0.0, 11.7918), (2.0, 1.0, 1.0, 26.7918)])
def test_general_examples(K, L, B, expected):
    rep = cls_general_log(0.0, 2, K, L, B, D_override=1.0)
    assert rep.log_value == pytest.approx(expected, abs=5e-5)
    assert rep.log_value == pytest.approx(float(oracle.log_cls_general(0, 2, K, L, B, 1)), rel=1e-14)
    assert rep.provenance["K_prime"] == K + L and rep.provenance["R_bound"] == K + L + B**2
    assert rep.value == pytest.approx(math.exp(expected), rel=1e-4)


def test_general_errors():
    with pytest.raises(DomainError):
        cls_general_log(0.0, 2, 1.0, 0.0, 0.0, D_override=0.0)
    with pytest.raises(DomainError):
        cls_general_log(0.0, 2, 0.1, 0.0, 0.0, D_override=1.0)
    rep = cls_general_log(0.0, 2, 0.1, 0.0, 0.0, D_override=1.0, allow_out_of_domain=True)
    assert rep.overrides
    with pytest.raises(ParameterError):
        cls_general_log(0.0, 2, 2.0, 0.0, 0.0)


def test_general_uses_diameter_bound_without_override():
    rep = cls_general_log(0.0, 2, 2.0, 0.0, 0.0, kappa=4.0)
    assert rep.provenance["D"] == pytest.approx(diameter_bound(2.0, 2, 4.0))
    assert rep.value is None and rep.log_value > 1e4


def test_uniform_example_and_intermediates():
    rep = cls_uniform_log(0.0, 2, 2.0, 4.0)
    assert rep.log_value == pytest.approx(125.1, abs=0.05)
    assert rep.log_value == pytest.approx(float(oracle.log_cls_uniform(0, 2, 2, 4)), rel=1e-13)
    D = rep.provenance["D"]
    assert D == pytest.approx(146.75, abs=0.005)
    assert D / 2 * math.sqrt(2) == pytest.approx(103.77, abs=0.005)
    assert math.log(D**2 / math.pi**2) == pytest.approx(7.688, abs=5e-4)
    assert math.log(1 + 5 * D**2) == pytest.approx(11.587, abs=5e-4)


def test_uniform_sigma_is_negligible_and_kappa_near_one_smaller():
    base = cls_uniform_log(0.0, 2, 2.0, 4.0).log_value
    assert cls_uniform_log(10.0, 2, 2.0, 4.0).log_value == base
    assert cls_uniform_log(0.0, 2, 2.0, 1.0001).log_value < base


def test_uniform_domain():
    for K, kappa in ((1.0, 4.0), (2.0, 1.0)):
        with pytest.raises(DomainError):
            cls_uniform_log(0.0, 2, K, kappa)
        assert cls_uniform_log(0.0, 2, K, kappa, allow_out_of_domain=True).overrides


def test_smoothing_adds_two_sigma_squared():
    # small synthetic manifold term so both sides are representable
    for sigma in (0.5, 3.0, 20.0):
        with_s = math.exp(cls_general_log(sigma, 2, 1.0, 0.0, 0.0, D_override=0.1).log_value)
        without = math.exp(cls_general_log(0.0, 2, 1.0, 0.0, 0.0, D_override=0.1).log_value)
        assert with_s - without == pytest.approx(2 * sigma**2, rel=1e-9)


def test_bounds_take_no_ambient_dimension():
    for fn in (cls_general_log, cls_uniform_log, diameter_bound, spectral_gap_bound):
        params = set(inspect.signature(fn).parameters)
        assert not params & {"d", "ambient_dim", "dim"}


def test_monotonicity_grids():
    Ks, kappas = (1.5, 2.0, 4.0), (2.0, 4.0, 40.0)
    grid = np.array([[cls_uniform_log(0.0, 2, K, k).log_value for k in kappas] for K in Ks])
    assert np.all(np.diff(grid, axis=0) >= 0) and np.all(np.diff(grid, axis=1) >= 0)
    Ls, Bs = (0.0, 0.5, 2.0), (0.0, 0.5, 2.0)
    cube = np.array([[[[cls_general_log(0.0, 2, K, L, B, kappa=k).log_value for k in kappas] for B in Bs]
                      for L in Ls] for K in Ks])
    for axis in range(4):
        assert np.all(np.diff(cube, axis=axis) >= 0)


# sampling-error bound


def test_sampling_error_degenerate_cases():
    p = dict(BOUND_EXAMPLE, eps=0.0)
    assert sampling_error_bound(t=0.0, **p) == pytest.approx(0.1 * 2 + 1.0)
    assert sampling_error_bound(t=1.5, **p) == pytest.approx(0.2 + math.exp(-1.5))
    assert sampling_error_bound(t=0.0, **BOUND_EXAMPLE) == pytest.approx(1.2)


def test_sampling_error_example_against_oracle():
    value = sampling_error_bound(t=2.0, **BOUND_EXAMPLE)
    assert value == pytest.approx(float(oracle.sampling_error(t=2, **BOUND_EXAMPLE)), rel=1e-13)
    for t in (0.01, 0.5, 7.0):
        assert sampling_error_bound(t=t, **BOUND_EXAMPLE) == pytest.approx(float(oracle.sampling_error(t=t, **BOUND_EXAMPLE)), rel=1e-12)


def test_sampling_error_domain():
    with pytest.raises(DomainError):
        sampling_error_bound(t=1.0, **dict(BOUND_EXAMPLE, d=2))
    assert math.isfinite(sampling_error_bound(t=1.0, **dict(BOUND_EXAMPLE, d=2), allow_out_of_domain=True))
    with pytest.raises(ParameterError):
        sampling_error_bound(t=1.0, **dict(BOUND_EXAMPLE, c_ls=0.0))


def test_sampling_error_overflow_is_infinite():
    assert sampling_error_bound(t=500.0, **dict(BOUND_EXAMPLE, L=100.0)) == math.inf
    assert sampling_error_terms(t=500.0, **dict(BOUND_EXAMPLE, L=100.0))[2] > 700


def test_sampling_error_interior_minimum():
    ts = np.linspace(0.01, 10, 1000)
    t_best, _, values = sampling_error_argmin(ts, **dict(BOUND_EXAMPLE, w0=10.0, eps=1e-8))
    assert ts[0] < t_best < ts[-1]
    assert values[0] > values.min() < values[-1]


def test_manifold_rows():
    m = EmbeddedTorus()
    reports = bounds_for_manifold(summarize(m, build_mesh(m, 24)), sigma=0.01)
    names = {r.name for r in reports}
    assert {"diameter", "cls_uniform"} <= names
    assert all(math.isfinite(r.log_value) for r in reports)
