import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from minsurf.catalog import make_surface
from minsurf.errors import SingularPoint
from minsurf.riemann_domain import (ChartPath, SurfacePoint, lift_point, line_piece,
                                    path_from_points)
from minsurf.weierstrass import (associate, classify_curve, conjugate, eval_phi,
                                 gauss_curvature, integrate_immersion, lopez_ros,
                                 lopez_ros_density, metric_density, normal_from_g,
                                 path_integral, second_form)


def _segment(b, z0, z1):
    piece = line_piece(b.domain, complex(z0), complex(z1), 0j)
    return ChartPath((complex(z0), complex(z1)), SurfacePoint(complex(z0)), False, (piece,))


def test_phi_catenoid(catenoid):
    assert np.allclose(eval_phi(catenoid, SurfacePoint(1 + 0j)), [0, 1j, 1], atol=1e-15)


def test_phi_enneper(enneper):
    assert np.allclose(eval_phi(enneper, SurfacePoint(2 + 0j)), [-1.5, 2.5j, 2], atol=1e-15)


def test_phi_at_puncture_raises(catenoid):
    with pytest.raises(SingularPoint):
        eval_phi(catenoid, catenoid.puncture("p0").point())


@settings(max_examples=40, deadline=None)
@given(k=st.integers(2, 6), alpha=st.floats(math.pi / 4, math.pi / 2 - 0.05),
       re=st.floats(-2, 2), im=st.floats(0.1, 2))
def test_phi_is_null(k, alpha, re, im):
    b = make_surface("mkx", {"k": k, "alpha": alpha})
    p = lift_point(b.domain, complex(re, im), 1.0)
    phi = eval_phi(b, p)
    assert abs(np.sum(phi * phi)) < 1e-10 * np.sum(np.abs(phi) ** 2)


def test_catenoid_radial_height(catenoid):
    X = integrate_immersion(catenoid, _segment(catenoid, 1.0, math.e))
    assert abs(X[2] - 1.0) < 1e-12
    assert abs(X[1]) < 1e-12


def test_empty_path_is_zero(catenoid):
    path = ChartPath((1 + 0j,), SurfacePoint(1 + 0j), False)
    assert np.all(integrate_immersion(catenoid, path) == 0)


def test_enneper_against_antiderivative(enneper):
    # Phi = (1/2 (1 - z^2), i/2 (1 + z^2), z) dz
    def F(z):
        return np.array([0.5 * (z - z ** 3 / 3), 0.5j * (z + z ** 3 / 3), 0.5 * z ** 2])

    z1 = 0.7 + 0.4j
    got = path_integral(enneper, _segment(enneper, 0.0, z1))
    assert np.max(np.abs(got - (F(z1) - F(0)))) < 1e-9
    got = integrate_immersion(enneper, _segment(enneper, 0.0, 1.0))
    assert np.allclose(got, [1 / 3, 0, 0.5], atol=1e-9)


def test_catenoid_waist_metric(catenoid):
    for th in np.linspace(0, 2 * np.pi, 7):
        p = SurfacePoint(complex(np.exp(1j * th)))
        assert abs(metric_density(catenoid, p) - 1.0) < 1e-14
        assert abs(gauss_curvature(catenoid, p) + 1.0) < 1e-14


def test_flat_piece_has_zero_curvature():
    b = make_surface("lr_limit_flat", {"k": 2})
    flat = replace(b, g_fn=lambda z, u: np.full(np.shape(z), 2.0 + 0j),
                   dlogg_fn=lambda z, u: np.zeros(np.shape(z), complex))
    assert gauss_curvature(flat, SurfacePoint(0.5 + 0.5j)) == 0.0


@settings(max_examples=25, deadline=None)
@given(alpha=st.floats(math.pi / 4, math.pi / 2 - 0.05), re=st.floats(-1.5, 1.5),
       im=st.floats(0.2, 1.5))
def test_curvature_matches_gauss_image(alpha, re, im):
    # K = solid angle of the normals / area of a tiny triangle of the surface
    b = make_surface("mkx", {"k": 2, "alpha": alpha})
    z0 = complex(re, im)
    p0 = lift_point(b.domain, z0, 1.0)
    h = 1e-3
    zs = [z0, z0 + h, z0 + h * np.exp(2j * np.pi / 3)]
    X, N = [], []
    for z in zs:
        path = path_from_points(b.domain, (z0, z), p0.u) if z != z0 else None
        X.append(np.zeros(3) if path is None else integrate_immersion(b, path, 1e-14))
        u = p0.u if path is None else path.pieces[-1].endpoints()[1][1]
        N.append(normal_from_g(complex(b.g(z, u))))
    X, N = np.array(X), np.array(N)
    area = 0.5 * np.linalg.norm(np.cross(X[1] - X[0], X[2] - X[0]))
    a, c, d = N
    solid = 2 * np.arctan2(abs(np.dot(a, np.cross(c, d))),
                           1 + np.dot(a, c) + np.dot(c, d) + np.dot(d, a))
    K_fd = -solid / area
    K = gauss_curvature(b, SurfacePoint(np.mean(zs), lift_point(b.domain, np.mean(zs), p0.u).u))
    assert abs(K_fd - K) <= 1e-2 * abs(K)


def test_classify_catenoid_rays(catenoid):
    for th in (0.3, 1.1, 2.5):
        path = _segment(catenoid, 0.5 * np.exp(1j * th), 2.0 * np.exp(1j * th))
        assert classify_curve(catenoid, path) == "principal"


def test_classify_enneper_lines(enneper):
    e = np.exp(1j * math.pi / 4)
    assert classify_curve(enneper, _segment(enneper, 0.1 * e, 2 * e)) == "asymptotic"
    assert classify_curve(enneper, _segment(enneper, 0.1, 2.0)) == "principal"
    assert classify_curve(enneper, _segment(enneper, 0.1, 2.0 * np.exp(0.4j))) == "neither"


def test_second_form_sign(enneper):
    p = SurfacePoint(1 + 0j)
    assert second_form(enneper, p, 1.0) == pytest.approx(1.0)
    assert second_form(enneper, p, 1j) == pytest.approx(-1.0)


def test_associate_identity_and_isometry(catenoid):
    same = associate(catenoid, 0.0)
    rng = np.random.default_rng(3)
    for _ in range(20):
        p = SurfacePoint(complex(*rng.uniform(-2, 2, 2)))
        assert np.array_equal(eval_phi(same, p), eval_phi(catenoid, p))
        th = rng.uniform(0, 2 * np.pi)
        assert abs(metric_density(associate(catenoid, th), p)
                   - metric_density(catenoid, p)) < 1e-14


def test_conjugate_catenoid_period(catenoid):
    loop = catenoid.basis[0]
    per = integrate_immersion(conjugate(catenoid), loop.path)
    assert np.allclose(per, [0, 0, 2 * np.pi], atol=1e-9)


def test_lopez_ros_identity_and_density(catenoid):
    b = make_surface("mkx", {"k": 3, "alpha": 1.1})
    assert lopez_ros(b, 1.0).g_scale == b.g_scale
    rng = np.random.default_rng(5)
    for _ in range(1000):
        lam = float(np.exp(rng.uniform(-2, 2)))
        z = complex(*rng.uniform(-2, 2, 2))
        if abs(z.imag) < 0.05:
            z += 0.1j
        p = lift_point(b.domain, z, 1.0)
        d_lam = metric_density(lopez_ros(b, lam), p)
        assert abs(d_lam - lopez_ros_density(b, lam, p)) <= 1e-12 * d_lam
        d = metric_density(b, p)
        lo, hi = min(lam, 1 / lam), max(lam, 1 / lam)
        assert lo * d * (1 - 1e-12) <= d_lam <= hi * d * (1 + 1e-12)


def test_normal_from_g_poles():
    assert np.allclose(normal_from_g(0j), [0, 0, -1])
    assert np.allclose(normal_from_g(complex(np.inf)), [0, 0, 1])
    assert np.allclose(normal_from_g(1 + 0j), [1, 0, 0])
