import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize_scalar

from minsurf.catalog import make_surface
from minsurf.errors import DegenerateAlpha, ZeroFluxAxisUndefined
from minsurf.periods import (E_integrals, chen_gackstatter_integrals, chen_gackstatter_rho,
                             chen_gackstatter_segment_period, cycle_period, end_axis,
                             end_cycle, flux, period_report, residue_and_growth,
                             solve_family, torque, torque_and_flux,
                             verify_monotonicity, verify_reduction_identities)
from minsurf.weierstrass import conjugate

TWO_PI = 2 * math.pi


def test_catenoid_waist_period(catenoid):
    per = cycle_period(catenoid, catenoid.basis[0])
    assert np.max(np.abs(per)) < 1e-9


def test_conjugate_catenoid_period(catenoid):
    per = cycle_period(conjugate(catenoid), catenoid.basis[0])
    assert np.allclose(per, [0, 0, TWO_PI], atol=1e-9)


def test_neg_lopezros_period_nonzero():
    b = make_surface("neg_lopezros_attempt", {"r": 1.0})
    rep = period_report(b, with_torque=False)
    assert not rep.period_free
    horiz = max(float(np.max(np.abs(c.period[:2]))) for c in rep.cycles)
    assert horiz > 1.0


def test_catenoid_residue(catenoid):
    res, growth = residue_and_growth(catenoid, "p0")
    assert abs(res - 1) < 1e-12 and abs(growth + 1) < 1e-12
    res, growth = residue_and_growth(catenoid, "infinity")
    assert abs(res + 1) < 1e-12 and abs(growth - 1) < 1e-12


@pytest.mark.parametrize("k,alpha", [(2, 1.0), (3, 1.2), (5, 0.9)])
def test_mkx_residues(k, alpha):
    b = make_surface("mkx", {"k": k, "alpha": alpha})
    sol = b.info["solution"]
    m, x = sol.m, sol.x
    res_b, _ = residue_and_growth(b, "bottom")
    res_m, _ = residue_and_growth(b, "middle")
    # residues on the surface count each of the k sheets meeting at the end
    assert abs(res_b / k + (m * x + 1)) < 1e-9
    assert abs(res_m / k - m * (x + 1 / x)) < 1e-9


def test_catenoid_end_flux(catenoid):
    f = flux(catenoid, end_cycle(catenoid, "p0"))
    assert np.max(np.abs(f[:2])) < 1e-9
    assert abs(abs(f[2]) - TWO_PI) < 1e-9


def test_flat_end_flux():
    b = make_surface("lr_limit_flat", {"k": 2})
    assert np.max(np.abs(flux(b, end_cycle(b, "p0")))) < 1e-9


def test_mkx_fluxes_sum_to_zero():
    b = make_surface("mkx", {"k": 3, "alpha": 1.2})
    total = sum(flux(b, end_cycle(b, p)) for p in b.punctures)
    assert np.max(np.abs(total)) < 1e-8


def test_catenoid_torque_on_axis(catenoid):
    T = torque(catenoid, end_cycle(catenoid, "p0"))
    assert np.max(np.abs(T[:2])) < 1e-8


@pytest.mark.parametrize("pid", ["bottom", "middle"])
def test_torque_base_shift(pid):
    b = make_surface("mkx", {"k": 2, "alpha": 1.1})
    c = end_cycle(b, pid)
    T0, F = torque_and_flux(b, c)
    for W in ([0.0, 0.0, 2.5], [1.0, -0.5, 0.3]):
        TW = torque(b, c, base=W)
        assert np.max(np.abs(TW - (T0 - np.cross(W, F)))) < 1e-8


def test_flat_end_axis_undefined():
    b = make_surface("mk", {"k": 2})
    with pytest.raises(ZeroFluxAxisUndefined):
        end_axis(b, "middle")


def _E_oracle(k, gam, sign):
    f = lambda p: mpmath.sqrt(mpmath.cos(p) ** 2 - mpmath.cos(gam) ** 2) \
        * mpmath.cos((1 + sign * 2.0 / k) * p)
    return float(mpmath.quad(f, [0, gam]))


@settings(max_examples=20, deadline=None)
@given(k=st.integers(2, 8), gam=st.floats(0.01, math.pi / 2 - 0.01))
def test_E_integrals_against_tanh_sinh(k, gam):
    ep, em = E_integrals(k, gam)
    assert abs(ep - _E_oracle(k, gam, +1)) < 1e-11
    assert abs(em - _E_oracle(k, gam, -1)) < 1e-11


def test_flat_member_has_m_zero():
    for k in (2, 3, 6):
        s = solve_family(k, math.pi / 4)
        assert abs(s.m) < 1e-8 and s.flat_middle
        assert s.growth[1] == 0


@settings(max_examples=20, deadline=None)
@given(k=st.integers(2, 6), alpha=st.floats(math.pi / 4, math.pi / 2 - 0.05))
def test_family_solution_properties(k, alpha):
    s = solve_family(k, alpha)
    assert s.compatibility_residual < 1e-10
    assert s.ratio_residual < 1e-9
    assert abs(sum(s.growth)) < 1e-10
    assert s.growth_condition_ok and s.ordering_ok
    assert s.m >= 0 and s.rho > 0


def test_solver_rejects_bad_alpha():
    with pytest.raises(DegenerateAlpha):
        solve_family(2, 0.5)
    with pytest.raises(DegenerateAlpha):
        solve_family(1, 1.0)


@pytest.mark.parametrize("k,alpha", [(2, math.pi / 4), (4, 1.3)])
def test_reduction_identities(k, alpha):
    m = solve_family(k, alpha).m
    for name, (direct, closed, rel) in verify_reduction_identities(k, alpha, m).items():
        assert rel < 1e-8, name


def test_chen_gackstatter_rho_golden_section():
    # independent route: tanh-sinh integrals, then a 1-D search on |period(rho)|
    I1 = float(mpmath.quad(lambda t: mpmath.sqrt((t * t - 1) / t), [-1, 0]))
    I2 = float(mpmath.quad(lambda t: mpmath.sqrt(t / (t * t - 1)), [-1, 0]))
    assert np.allclose(chen_gackstatter_integrals(), (I1, I2), rtol=1e-12)
    opt = minimize_scalar(lambda r: abs(I1 / r - r * I2), bracket=(0.5, 1.0, 2.0),
                          method="golden", tol=1e-12)
    rho = chen_gackstatter_rho()
    assert rho > 0 and math.isfinite(rho)
    assert abs(opt.x - rho) < 1e-8
    assert abs(chen_gackstatter_segment_period(rho)) < 1e-9


def test_chen_gackstatter_period_free():
    rep = period_report(make_surface("chen_gackstatter"), with_torque=False)
    assert rep.max_period < 1e-9


@pytest.mark.parametrize("k", [2, 5])
def test_monotonicity_limits(k):
    rep = verify_monotonicity(k, 100)
    assert rep.low_error < 1e-3 and rep.high_error < 1e-3
    assert abs(rep.high_limit - (k - 1) / (k + 1)) < 1e-3
    assert rep.max_step < 0


def test_monotonicity_sample_floor():
    with pytest.raises(ValueError):
        verify_monotonicity(2, 5)
