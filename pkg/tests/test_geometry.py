import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from manifold_langevin.errors import DomainError, ParameterError, ResolutionError
from manifold_langevin.geometry import (
    Circle,
    EmbeddedTorus,
    PhaseTorus,
    Sphere,
    bishop_gromov_check,
    build_mesh,
    chart_eval,
    diameter_empirical,
    kato_constant,
    kato_constants,
    kato_radius,
    make_manifold,
    read_geodesic_bin,
    ricci_lower,
    single_point_mesh,
    summarize,
    write_geodesic_bin,
    write_mesh_csv,
)


def numeric_jacobian(m, theta, h=1e-6):
    theta = np.asarray(theta, dtype=float)
    cols = []
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = h
        cols.append((m.embed(theta + e)[0] - m.embed(theta - e)[0]) / (2 * h))
    return np.column_stack(cols)


# chart evaluation


def test_circle_chart_point_and_metric():
    point, g = chart_eval(Circle(radius=2.0, ambient_dim=5), [0.0])
    np.testing.assert_allclose(point, [2, 0, 0, 0, 0])
    np.testing.assert_allclose(g, [[4.0]])


def test_sphere_metric_is_identity_at_chart_origin():
    point, g = chart_eval(Sphere(), [0.0, 0.0])
    np.testing.assert_allclose(point, [0, 0, 1], atol=1e-15)
    np.testing.assert_allclose(g, np.eye(2), atol=1e-15)


@pytest.mark.parametrize("theta", [[0.0, 0.0], [1.3, 4.1], [5.9, 2.2]])
def test_phase_torus_metric_is_constant(theta):
    m = PhaseTorus(length=16)
    _, g = chart_eval(m, theta)
    np.testing.assert_allclose(g, np.diag([8.0, 8.0]), atol=1e-12)
    jac = numeric_jacobian(m, theta)
    np.testing.assert_allclose(jac.T @ jac, g, atol=1e-7)


@pytest.mark.parametrize(
    "m, theta",
    [
        (Circle(radius=1.5, ambient_dim=3), [0.7]),
        (Sphere(intrinsic_dim=3, radius=2.0), [0.3, -0.4, 1.0]),
        (EmbeddedTorus(minor=1.0, major=3.0), [0.5, 2.0]),
        (PhaseTorus(amplitude1=0.5, amplitude2=2.0, length=20), [1.0, 3.0]),
    ],
)
def test_analytic_jacobian_matches_finite_differences(m, theta):
    np.testing.assert_allclose(m.jacobian(np.array([theta]))[0], numeric_jacobian(m, theta), atol=1e-7)


def test_chart_outside_domain_raises():
    with pytest.raises(DomainError):
        chart_eval(Sphere(), [2.0, 0.0])
    with pytest.raises(DomainError):
        chart_eval(Circle(), [0.0, 1.0])


def test_make_manifold_rejects_unknown_kind():
    assert isinstance(make_manifold({"kind": "sphere", "radius": 2.0}), Sphere)
    with pytest.raises(ParameterError):
        make_manifold({"kind": "klein_bottle"})


# curvature


def test_ricci_lower_closed_forms():
    assert ricci_lower(Sphere(), [0.2, 0.3]) == pytest.approx(1.0)
    assert ricci_lower(Sphere(intrinsic_dim=3, radius=2.0), [0.0, 0.0, 0.0]) == pytest.approx(0.5)
    assert ricci_lower(PhaseTorus(), [1.0, 2.0]) == 0.0
    assert ricci_lower(Circle(), [1.0]) == 0.0
    assert ricci_lower(EmbeddedTorus(minor=1.0, major=3.0), [0.4, math.pi]) == pytest.approx(-0.5)


# meshes


@pytest.mark.parametrize(
    "m, res, tol",
    [
        (Circle(), 64, 0.01),
        (Sphere(), 48, 0.02),
        (EmbeddedTorus(minor=1.0, major=3.0), 48, 0.02),
        (PhaseTorus(), 48, 0.02),
    ],
)
def test_mesh_volume_matches_analytic(m, res, tol):
    mesh = build_mesh(m, res)
    assert mesh.volume == pytest.approx(m.volume, rel=tol)


def test_mesh_resolution_too_small():
    with pytest.raises(ParameterError):
        build_mesh(Circle(), 4)


def test_geodesic_matrix_is_a_metric_dominating_chords():
    mesh = build_mesh(Sphere(), 12)
    g = mesh.geodesic
    assert np.all(np.diag(g) == 0)
    np.testing.assert_allclose(g, g.T)
    chords = np.linalg.norm(mesh.points[:, None] - mesh.points[None], axis=-1)
    assert np.all(g >= chords - 1e-12)
    # triangle inequality through every intermediate node
    assert np.all(g[:, None, :] <= g[:, :, None] + g[None, :, :] + 1e-12)


def test_diameters():
    assert diameter_empirical(build_mesh(Circle(), 64)) == pytest.approx(math.pi, rel=0.02)
    assert diameter_empirical(build_mesh(Sphere(), 32)) == pytest.approx(math.pi, rel=0.03)
    assert diameter_empirical(single_point_mesh([1.0, 2.0])) == 0.0


def test_diameter_stable_under_resolution_doubling():
    m = EmbeddedTorus()
    d1 = diameter_empirical(build_mesh(m, 24))
    d2 = diameter_empirical(build_mesh(m, 48))
    assert abs(d1 - d2) / d2 < 0.05


# Kato constants


@pytest.mark.parametrize(
    "K, d, expected", [(1.0, 2, math.log(2)), (4.0, 5, math.log(2)), (0.25, 2, 2 * math.log(2))]
)
def test_kato_radius(K, d, expected):
    assert kato_radius(K, d) == pytest.approx(expected)


def test_kato_radius_rejects_nonpositive_K():
    with pytest.raises(ParameterError):
        kato_radius(0.0, 2)


def test_kato_constant_sphere_and_flat_torus():
    sphere = Sphere()
    for R in (0.3, 1.0, 2.5):
        assert kato_constant(build_mesh(sphere, 24), sphere, R) == 0.0
    flat = PhaseTorus()
    mesh = build_mesh(flat, 24)
    for R in (1.0, 3.0):
        assert kato_constant(mesh, flat, R) == pytest.approx(1.0, abs=1e-6)


def test_kato_constant_below_spacing_raises():
    m = Circle()
    mesh = build_mesh(m, 16)
    with pytest.raises(ResolutionError):
        kato_constant(mesh, m, mesh.spacing / 2)


def test_kato_at_canonical_radius_bounded_by_K_plus_dim():
    m = EmbeddedTorus()
    mesh = build_mesh(m, 32)
    K = float(-m.ricci_lower(mesh.nodes).min())
    kap = kato_constants(mesh, m, K)
    for conv in ("log2", "log4"):
        assert 0 <= kap[conv]["kappa"] <= K + m.intrinsic_dim


def test_summary_fields_nonnegative():
    m = EmbeddedTorus()
    s = summarize(m, build_mesh(m, 24))
    assert all(v >= 0 for v in s.as_dict().values())
    assert s.K == pytest.approx(0.5, rel=0.05)
    assert s.K_eff > 1


# Bishop-Gromov comparison


def test_bishop_gromov_equal_radii():
    mesh = build_mesh(Sphere(), 16)
    assert bishop_gromov_check(mesh, 1.0, 0, 0.7, 0.7, 2) == (1.0, 1.0, True)


def test_bishop_gromov_examples():
    sphere = build_mesh(Sphere(), 32)
    assert bishop_gromov_check(sphere, 0.01, 100, 0.5, 1.0, 2)[2]
    flat = build_mesh(PhaseTorus(), 64)
    for node in (0, 7, 2000):
        assert bishop_gromov_check(flat, 1.0, node, 0.4, 0.8, 2)[2]
        assert bishop_gromov_check(flat, 1.0, node, 1.0, 3.0, 2)[2]


def test_bishop_gromov_rejects_reversed_radii():
    mesh = build_mesh(Circle(), 16)
    with pytest.raises(ParameterError):
        bishop_gromov_check(mesh, 1.0, 0, 1.0, 0.5, 1)


# export


def test_mesh_csv_and_geodesic_roundtrip(tmp_path):
    mesh = build_mesh(Circle(), 8)
    write_mesh_csv(mesh, tmp_path / "mesh.csv")
    table = np.loadtxt(tmp_path / "mesh.csv", delimiter=",", skiprows=1)
    assert table.shape == (8, 1 + 1 + 2 + 1)
    np.testing.assert_allclose(table[:, -1], mesh.weights)
    write_geodesic_bin(mesh.geodesic, tmp_path / "g.bin")
    np.testing.assert_array_equal(read_geodesic_bin(tmp_path / "g.bin"), mesh.geodesic)
    assert (tmp_path / "g.bin").stat().st_size == 16 + 8 * 64


@settings(max_examples=25, deadline=None)
@given(st.floats(0.2, 5.0), st.integers(2, 6))
def test_circle_embedding_norm_is_radius(r, d):
    m = Circle(radius=r, ambient_dim=d)
    theta = np.linspace(0, 2 * np.pi, 17)[:-1, None]
    np.testing.assert_allclose(np.linalg.norm(m.embed(theta), axis=1), r)
    assert m.rho == r
