import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from minsurf.errors import PathClearanceError
from minsurf.riemann_domain import (INF, ChartPath, SurfacePoint, SymmetryElement,
                                    apply_symmetry, chen_gackstatter_curve,
                                    continue_branch, curve_residual, fiber, homology_basis,
                                    lift_point, mkx_curve, planar_domain, symmetry_group,
                                    unitary_cycle)


def test_saddle_point_is_regular():
    c = mkx_curve(2, x=1.0)
    p = lift_point(c, 0j, 0j)
    assert not p.is_puncture
    assert p.z == 0 and p.u == 0


def test_bottom_end_is_puncture():
    c = mkx_curve(2, x=1.0)
    p = lift_point(c, 1.0, 0j)
    assert p.at_puncture == "bottom"
    assert p.u == INF


def test_lift_residual():
    c = mkx_curve(3, x=0.8)
    p = lift_point(c, 0.3 + 0.1j, 1.0)
    assert curve_residual(c, p.z, p.u) < 1e-12


@settings(max_examples=40, deadline=None)
@given(k=st.integers(2, 6), alpha=st.floats(math.pi / 4, math.pi / 2 - 0.02),
       re=st.floats(-3, 3), im=st.floats(0.05, 3), j=st.integers(0, 5))
def test_lift_picks_the_hinted_root(k, alpha, re, im, j):
    c = mkx_curve(k, alpha)
    z = complex(re, im)
    roots = fiber(c, z)
    hint = roots[j % k]
    p = lift_point(c, z, hint)
    assert curve_residual(c, z, p.u) < 1e-12
    assert abs(p.u - hint) <= 1e-9 * max(1.0, abs(hint))


def _loop(center, radius, n=200):
    th = np.linspace(0, 2 * np.pi, n)
    return tuple(center + radius * np.exp(1j * th))


def test_contractible_loop_keeps_sheet():
    c = mkx_curve(2, x=1.0)
    zs = _loop(0.5 + 2j, 0.3)
    u0 = lift_point(c, zs[0], 1j).u
    pts = continue_branch(c, ChartPath(zs, SurfacePoint(zs[0], u0), True))
    assert abs(pts[-1].u - u0) < 1e-10 * abs(u0)


def test_loop_around_branch_point_swaps_sheets():
    c = mkx_curve(2, x=1.0)
    zs = _loop(1.0, 0.3)
    u0 = lift_point(c, zs[0], 1j).u
    pts = continue_branch(c, ChartPath(zs, SurfacePoint(zs[0], u0), True))
    # explicit two-root formula: the other root is -u0
    assert abs(pts[-1].u + u0) < 1e-10 * abs(u0)
    for p in pts:
        assert curve_residual(c, p.z, p.u) < 1e-10


def test_continuation_tracks_sqrt_formula():
    # along an arc avoiding branch points the continued sheet equals a
    # continuous branch of sqrt(F) chosen by phase unwrapping
    c = mkx_curve(2, x=1.0)
    zs = tuple(2.0 * np.exp(1j * np.linspace(0.1, 3.0, 300)))
    u0 = lift_point(c, zs[0], 1.0).u
    pts = continue_branch(c, ChartPath(zs, SurfacePoint(zs[0], u0), False))
    F = np.array([complex(c.F(z)) for z in zs])
    ph = np.unwrap(np.angle(F))
    ref = np.sqrt(np.abs(F)) * np.exp(0.5j * ph)
    if abs(ref[0] - u0) > abs(ref[0] + u0):
        ref = -ref
    got = np.array([p.u for p in pts])
    assert np.max(np.abs(got - ref) / np.abs(ref)) < 1e-10


def test_clearance_error():
    c = mkx_curve(2, x=1.0)
    zs = (0.5 + 0j, 1.5 + 0j)
    with pytest.raises(PathClearanceError):
        continue_branch(c, ChartPath(zs, SurfacePoint(zs[0], 1.0), False))


def test_reflection_fixes_saddle():
    p = apply_symmetry(SymmetryElement("reflection_f"), SurfacePoint(0j, 0j))
    assert p.z == 0 and p.u == 0


def test_rotation_multiplies_fibre():
    c = mkx_curve(3, 1.0)
    p = lift_point(c, 0.2 + 0.4j, 1.0)
    q = apply_symmetry(SymmetryElement("rotation_tau_power", 1), p, c)
    assert q.z == p.z
    assert abs(q.u - cmath.exp(-2j * math.pi / 3) * p.u) < 1e-15
    assert curve_residual(c, q.z, q.u) < 1e-12


@settings(max_examples=30, deadline=None)
@given(k=st.integers(2, 6), alpha=st.floats(math.pi / 4, math.pi / 2 - 0.02),
       re=st.floats(-3, 3), im=st.floats(0.05, 3))
def test_symmetries_preserve_curve(k, alpha, re, im):
    c = mkx_curve(k, alpha)
    p = lift_point(c, complex(re, im), 1.0)
    for s in symmetry_group(c):
        q = apply_symmetry(s, p, c)
        assert curve_residual(c, q.z, q.u) < 1e-11
    # the reflection is an involution
    f = SymmetryElement("reflection_f")
    back = apply_symmetry(f, apply_symmetry(f, p))
    assert back == p


def test_planar_basis_single_loop():
    basis = homology_basis(planar_domain([0j, INF]))
    assert len(basis) == 1
    assert basis[0].path.closed


def test_mkx_basis():
    basis = homology_basis(mkx_curve(2, math.pi / 4))
    labels = [c.label for c in basis]
    assert labels[:2] == ["gamma1", "gamma2"]
    assert len(basis) == 5


def test_chen_gackstatter_basis():
    assert len(homology_basis(chen_gackstatter_curve())) == 3


@pytest.mark.parametrize("k,alpha", [(2, math.pi / 4), (3, 1.0), (6, 1.5)])
@pytest.mark.parametrize("which", ["gamma1", "gamma2"])
def test_unitary_cycles_lie_on_unit_fibre(k, alpha, which):
    c = mkx_curve(k, alpha)
    cyc = unitary_cycle(c, which)
    for pc in cyc.path.pieces:
        t = np.linspace(pc.t0, pc.t1, 801)
        z, u, dz = pc.evaluate(t)
        assert np.max(np.abs(np.abs(u) - 1)) < 1e-12
        assert np.max(curve_residual(c, z, u)) < 1e-12
        fd = np.gradient(z, t)
        assert np.max(np.abs(fd[5:-5] - dz[5:-5])) < 1e-3 * np.max(np.abs(dz))
    (z0, u0), _ = cyc.path.pieces[0].endpoints()
    _, (z1, u1) = cyc.path.pieces[-1].endpoints()
    assert abs(z0 - z1) < 1e-12 and abs(u0 - u1) < 1e-12
