import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from manifold_langevin.errors import ParameterError
from manifold_langevin.metrics import (
    PointCloud,
    decay_fit,
    divergence_detect,
    mixing_time,
    moving_average,
    self_distance_floor,
    w2,
    w2_exact,
    w2_sliced,
    write_metric_series,
)


def brute_force_w2(a, b):
    n = len(a)
    best = min(
        sum(float(np.sum((a[i] - b[p[i]]) ** 2)) for i in range(n)) for p in itertools.permutations(range(n))
    )
    return math.sqrt(best / n)


def clouds(n, d):
    return arrays(np.float64, (n, d), elements=st.floats(-10, 10, allow_nan=False, width=64))


# exact W2


def test_exact_examples():
    a = np.random.default_rng(0).standard_normal((20, 3))
    assert w2_exact(a, a) == 0.0
    assert w2_exact([[0.0, 0.0]], [[3.0, 4.0]]) == pytest.approx(5.0)
    assert w2_exact([0.0, 1.0], [0.5, 2.0]) == pytest.approx(math.sqrt(0.625))


def test_exact_matches_brute_force():
    rng = np.random.default_rng(1)
    for _ in range(200):
        n, d = rng.integers(1, 8), rng.integers(1, 4)
        a, b = rng.standard_normal((n, d)), rng.standard_normal((n, d)) + rng.uniform(-2, 2, d)
        assert abs(w2_exact(a, b) - brute_force_w2(a, b)) <= 1e-9


def test_exact_errors():
    with pytest.raises(ParameterError):
        w2_exact(np.zeros((3, 2)), np.zeros((4, 2)))
    with pytest.raises(ParameterError):
        w2_exact(np.zeros((10, 1)), np.zeros((10, 1)), max_n=5)
    with pytest.raises(ParameterError):
        PointCloud(np.array([[np.inf, 0.0]]))
    with pytest.raises(ParameterError):
        PointCloud(np.zeros((2, 2)), weights=[0.7, 0.7])


@settings(max_examples=50, deadline=None)
@given(clouds(6, 2), clouds(6, 2), clouds(6, 2))
def test_exact_is_a_metric(a, b, c):
    ab, ba = w2_exact(a, b), w2_exact(b, a)
    assert ab == pytest.approx(ba, abs=1e-12)
    assert ab <= w2_exact(a, c) + w2_exact(c, b) + 1e-9


@settings(max_examples=100, deadline=None)
@given(clouds(7, 2), clouds(7, 2), st.permutations(range(7)))
def test_exact_below_any_matching(a, b, perm):
    matching = math.sqrt(np.mean(np.sum((a - b[list(perm)]) ** 2, axis=1)))
    assert w2_exact(a, b) <= matching + 1e-9


@settings(max_examples=50, deadline=None)
@given(clouds(5, 3), clouds(5, 3), arrays(np.float64, 3, elements=st.floats(-5, 5, width=64)))
def test_translation(a, b, v):
    assert w2_exact(a + v, b + v) == pytest.approx(w2_exact(a, b), abs=1e-9)
    assert w2_exact(a + v, b) <= w2_exact(a, b) + np.linalg.norm(v) + 1e-9
    assert w2_exact(a + v, a) == pytest.approx(np.linalg.norm(v), abs=1e-9)


# sliced W2


def test_sliced_examples():
    a = np.random.default_rng(2).standard_normal((40, 2))
    assert w2_sliced(a, a) == 0.0
    x, y = np.random.default_rng(3).standard_normal((2, 30, 1))
    for k in (1, 5, 64):
        assert w2_sliced(x, y, n_projections=k) == pytest.approx(w2_exact(x, y), rel=1e-12)


def test_sliced_close_to_exact_on_gaussians():
    # pairs of distinct Gaussians, so the population distance dominates the sampling floor
    transforms = [(np.eye(2), [0.8, 0.0]), (np.diag([1.5, 0.7]), [0.8, 0.0]), (2 * np.eye(2), [0.0, 0.0])]
    for A, m in transforms:
        for seed in range(5):
            rng = np.random.default_rng(seed)
            a = rng.standard_normal((512, 2))
            b = rng.standard_normal((512, 2)) @ A.T + m
            exact = w2_exact(a, b)
            assert abs(w2_sliced(a, b, seed=seed) - exact) <= 0.25 * exact


def test_sliced_scaling_on_translations():
    a = np.random.default_rng(6).standard_normal((64, 5))
    v = np.array([1.0, -2.0, 0.5, 0.0, 3.0])
    scaled = w2_sliced(a + v, a, n_projections=4096)
    plain = w2_sliced(a + v, a, n_projections=4096, scaled=False)
    assert scaled == pytest.approx(np.linalg.norm(v), rel=0.05)
    assert plain == pytest.approx(scaled / math.sqrt(5), rel=1e-12)
    assert w2_sliced(a, a[::-1]) == pytest.approx(0.0, abs=1e-12)


def test_sliced_unequal_sizes_match_replicated_cloud():
    # a cloud repeated k times is the same measure
    rng = np.random.default_rng(4)
    a, b = rng.standard_normal((12, 2)), rng.standard_normal((8, 2))
    assert w2_sliced(a, b, seed=1) == pytest.approx(w2_sliced(np.repeat(a, 2, 0), np.repeat(b, 3, 0), seed=1))


def test_dispatch_and_floor():
    rng = np.random.default_rng(5)
    a, b = rng.standard_normal((50, 2)), rng.standard_normal((60, 2))
    assert w2(a, a[:50])[1] == "exact"
    assert w2(a, b)[1] == "sliced"
    with pytest.raises(ParameterError):
        w2(a, a, estimator="sinkhorn")
    mean, vals = self_distance_floor(a, [rng.standard_normal((50, 2)) for _ in range(3)])
    assert len(vals) == 3 and mean == pytest.approx(np.mean(vals)) and mean > 0


# decay fits


def test_decay_fit_exact_exponential():
    t = np.arange(11.0)
    fit = decay_fit(np.column_stack([t, 3 * np.exp(-0.5 * t)]))
    assert fit.rate == pytest.approx(0.5, abs=1e-8)
    assert fit.floor == pytest.approx(0.0, abs=1e-8)
    assert fit.residual < 1e-8 and fit.converged


def test_decay_fit_constant_series():
    fit = decay_fit([(t, 2.0) for t in range(6)])
    assert fit.rate == pytest.approx(0.0, abs=1e-9) or fit.amplitude == pytest.approx(0.0, abs=1e-9)
    assert fit(10.0) == pytest.approx(2.0)


def test_decay_fit_noisy():
    t = np.linspace(0, 15, 31)
    for seed in range(10):
        noise = 1 + 0.01 * np.random.default_rng(seed).standard_normal(t.size)
        fit = decay_fit(np.column_stack([t, (1.5 * np.exp(-0.3 * t) + 0.2) * noise]))
        assert 0.25 <= fit.rate <= 0.35


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(0.05, 2.0), st.floats(0.0, 1.0), st.floats(0.0, 3.0))
def test_decay_fit_recovers_own_model(amp, rate, floor, t0):
    t = t0 + np.linspace(0, 6 / rate, 25)
    w = amp * np.exp(-rate * t) + floor + 1e-3
    fit = decay_fit(np.column_stack([t, w]))
    assert fit.rate == pytest.approx(rate, rel=0.01)
    assert fit.amplitude == pytest.approx(amp, rel=0.01)


def test_decay_fit_errors():
    with pytest.raises(ParameterError):
        decay_fit([(0, 1.0), (1, 0.5), (2, 0.2)])
    with pytest.raises(ParameterError):
        decay_fit([(0, 1.0), (1, 0.5), (2, 0.0), (3, 0.1)])


# mixing time and divergence


def test_moving_average_shrinks_at_ends():
    np.testing.assert_allclose(moving_average([1.0, 2.0, 6.0, 1.0]), [1.5, 3.0, 3.0, 3.5])
    np.testing.assert_allclose(moving_average([4.0, 2.0], window=1), [4.0, 2.0])


def test_mixing_time_examples():
    t = np.arange(15.0)
    w = np.where(t < 7, 10.0, 1.0)
    w[6:9] = [3.0, 1.0, 1.0]
    assert mixing_time(np.column_stack([t, w]), 2.0) == 7.0
    assert mixing_time(np.column_stack([t, w + 5]), 2.0) is None
    with pytest.raises(ParameterError):
        mixing_time(np.column_stack([t, w]), 0.0)


def test_mixing_time_noise_robust():
    t = np.arange(40.0)
    clean = 5 * np.exp(-0.2 * t) + 0.5
    threshold = 1.0
    t_clean = mixing_time(np.column_stack([t, clean]), threshold)
    for seed in range(20):
        noisy = clean * (1 + 0.01 * np.random.default_rng(seed).standard_normal(t.size))
        assert abs(mixing_time(np.column_stack([t, noisy]), threshold) - t_clean) <= 1


def test_divergence_examples():
    t = np.arange(21.0)
    dec = divergence_detect(np.column_stack([t, np.exp(-t)]))
    assert not dec.diverged and dec.degradation <= 1
    v = np.concatenate([np.linspace(2, 1, 11), np.linspace(1, 1.5, 11)[1:]])
    res = divergence_detect(np.column_stack([t, v]))
    assert res.t_star == 10.0 and res.diverged
    smooth = moving_average(v)
    assert res.degradation == pytest.approx(smooth[-1] / smooth[10])
    assert res.degradation > 1.4


def test_metric_series_csv(tmp_path):
    write_metric_series(tmp_path / "s.csv", [{"t": 0.5, "estimator": "exact", "value": 1.0, "floor": 0.1, "seed": 3}])
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines == ["t,estimator,value,floor,seed", "0.5,exact,1.0,0.1,3"]
