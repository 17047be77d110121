import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from minsurf.catalog import make_surface
from minsurf.errors import ParamOutOfRange, UnsupportedTopology
from minsurf.periods import chen_gackstatter_rho
from minsurf.spectral import (RationalMap, cotangent_stiffness, fit_rational, gauss_map,
                              great_circle_branch_check, index_estimate, octasphere,
                              pullback_areas, stereo, torus_lift)

cplx = st.builds(complex, st.floats(-2, 2), st.floats(-2, 2))


def _euler(V, T):
    e = np.unique(np.sort(np.concatenate([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]]),
                          axis=1), axis=0)
    return len(V) - len(e) + len(T)


@pytest.mark.parametrize("n", [1, 2, 5, 8])
def test_octasphere_counts(n):
    V, T = octasphere(n)
    assert len(V) == 4 * n * n + 2
    assert _euler(V, T) == 2
    assert np.allclose(np.linalg.norm(V, axis=1), 1)
    P = V[T]
    out = np.einsum("ij,ij->i", np.cross(P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]), P.mean(1))
    assert np.all(out > 0)


def test_octasphere_has_special_points():
    z = stereo(octasphere(4)[0])
    for q in (0, 1, -1, 1j, -1j):
        assert np.min(np.abs(z - q)) < 1e-12
    assert np.sum(~np.isfinite(z)) == 1


def test_torus_lift_is_a_torus():
    V, T = octasphere(8)
    V2, T2, src = torus_lift(V, T)
    assert _euler(V2, T2) == 0
    assert np.array_equal(V2, V[src])


def test_cotangent_stiffness_properties():
    V, T = octasphere(6)
    K = cotangent_stiffness(V, T)
    assert abs(K - K.T).max() < 1e-14
    assert np.max(np.abs(K @ np.ones(len(V)))) < 1e-12
    x = np.random.default_rng(0).normal(size=len(V))
    assert x @ (K @ x) > 0


def test_fit_rational_recovers_map():
    R = fit_rational(lambda z: (z ** 2 - 0.5) / (2 * z + 1j))
    assert R.degree == 2
    z = np.array([0.3 + 0.1j, -1.2 + 0.8j])
    assert np.allclose(R(z), (z ** 2 - 0.5) / (2 * z + 1j), rtol=1e-10)


def test_critical_points_count():
    R = RationalMap((0, 0, 0, 1), (1,))
    crit = R.critical_points()
    assert len(crit) == 2 * R.degree - 2
    assert all(v == 0 or math.isinf(abs(v)) for _, v in crit)


def test_great_circle_synthetic():
    assert great_circle_branch_check([0, complex(math.inf), 1, -1, 2.5])
    assert great_circle_branch_check([1j, -1j, 1, -1])
    assert not great_circle_branch_check([0, complex(math.inf), 1, 0.5 + 0.5j])


@pytest.mark.parametrize("n", [3, 4, 5])
def test_n_noid_branch_values_on_great_circle(n):
    b = make_surface("n_noid", {"n": n})
    gm = gauss_map(b)
    assert gm.degree == n - 1
    assert great_circle_branch_check(b)


def test_chen_gackstatter_branch_values():
    # g = rho gamma with gamma^2 = z/(z^2 - 1); d(gamma^2) = 0 at z = +-i, where
    # g^2 = -+ i rho^2 / 2, so four values sit at |g| = rho/sqrt(2) on a
    # latitude circle together with 0 and infinity at the poles
    rho = chen_gackstatter_rho()
    gm = gauss_map(make_surface("chen_gackstatter"))
    assert gm.degree == 2 and gm.genus == 1
    finite = [v for v in gm.branch_values if np.isfinite(v) and abs(v) > 1e-9]
    expect = [rho / math.sqrt(2) * np.exp(1j * math.pi * (2 * j + 1) / 4) for j in range(4)]
    assert len(finite) == 4
    for e in expect:
        assert min(abs(v - e) for v in finite) < 1e-8
    assert not great_circle_branch_check(make_surface("chen_gackstatter"))


@settings(max_examples=15, deadline=None)
@given(d=st.integers(1, 4), coef=st.lists(cplx, min_size=10, max_size=10))
def test_pullback_area_is_degree(d, coef):
    P = np.array(coef[:d + 1])
    Q = np.array(coef[5:6 + d])
    P[-1] += 3.0
    Q[0] += 3.0
    R = RationalMap(tuple(P), tuple(Q))
    if R.degree != d:
        return
    V, T = octasphere(24)
    area = pullback_areas(gauss_map(R), V, T).sum()
    assert abs(area - 4 * math.pi * d) < 1e-3 * 4 * math.pi * d


@settings(max_examples=6, deadline=None)
@given(a=cplx, b=cplx, c=cplx)
def test_degree_one_maps_have_index_one(a, b, c):
    # z -> (a + (1 + b) z)/(1 + c z); nearly degenerate maps are skipped
    num, den = (a, 1 + b), (1 + 0j, c)
    det = num[1] * den[0] - num[0] * den[1]
    if abs(det) < 0.5:
        return
    rep = index_estimate(RationalMap(num, den), 32, 3)
    assert rep.index == 1
    assert rep.margin > 0.05
    assert len(rep.threshold_cluster) == 3
    assert rep.genus0_bound_ok


def test_identity_spectrum():
    rep = index_estimate(RationalMap.identity(), 32, 3)
    assert rep.eigenvalues_below_threshold[0] == 0.0
    assert rep.index == 1 and rep.stable
    assert all(abs(x - 2) < 0.01 for x in rep.threshold_cluster)
    assert rep.great_circle and rep.expected_index == 1


def test_mkx_not_supported():
    with pytest.raises(UnsupportedTopology):
        index_estimate(make_surface("mkx", {"k": 2, "alpha": 1.0}), 16, 2)


def test_refinement_floor():
    with pytest.raises(ParamOutOfRange):
        index_estimate(RationalMap.identity(), 16, 1)
    with pytest.raises(ParamOutOfRange):
        index_estimate(RationalMap.identity(), 2, 3)
