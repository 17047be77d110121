"""Periods, residues, flux, torque and the M_{k,x} period solver."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy import integrate

from . import quadrature
from .errors import (DegenerateAlpha, PathClearanceError, MonotonicityViolated, QuadratureNoConverge,
                     ZeroFluxAxisUndefined)
from .riemann_domain import (INF, MKX, PLANAR, ChartPath, Cycle, Puncture,
                             SurfacePoint, _isinf, _segment_distance, end_loop, gamma1_arc,
                             homology_basis, mkx_curve, uhp_arc, uhp_ray, line_piece)
from .tolerances import PERIOD_TOL, QUAD_TOL
from .weierstrass import (WeierstrassBundle, form_integral, path_integral)

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# reports

@dataclass(frozen=True)
class ResidueReport:
    puncture: str
    residue: complex            # residue of dh in a local coordinate of the surface
    chart_residue: complex      # the same computed as if z were a coordinate
    ramification: int
    growth: float               # -Re(residue)
    residue_phi1: complex
    residue_phi2: complex
    flux: np.ndarray
    torque: np.ndarray | None = None
    axis: np.ndarray | None = None


@dataclass(frozen=True)
class CyclePeriod:
    label: str
    period: np.ndarray          # Re of the integral
    integral: np.ndarray        # complex integral of Phi
    flux: np.ndarray            # -Im of the integral


@dataclass(frozen=True)
class PeriodReport:
    surface: str
    cycles: tuple
    ends: tuple
    residue_sum: complex
    growth_sum: float
    max_period: float
    period_free: bool
    axis_balance: np.ndarray | None = None


# ---------------------------------------------------------------------------
# periods and residues

def cycle_period(b: WeierstrassBundle, c: Cycle, epsabs=QUAD_TOL) -> np.ndarray:
    return path_integral(b, c.path, epsabs).real


def cycle_integral(b: WeierstrassBundle, c: Cycle, epsabs=QUAD_TOL) -> np.ndarray:
    return path_integral(b, c.path, epsabs)


def flux(b: WeierstrassBundle, c: Cycle, epsabs=QUAD_TOL) -> np.ndarray:
    """Flux = -Period of the conjugate surface = -Im of the integral of Phi."""
    return -path_integral(b, c.path, epsabs).imag


def _puncture(b, puncture) -> Puncture:
    return puncture if isinstance(puncture, Puncture) else b.puncture(puncture)


def end_cycle(b: WeierstrassBundle, puncture) -> Cycle:
    p = _puncture(b, puncture)
    return end_loop(b.domain, p)


def residue_and_growth(b: WeierstrassBundle, puncture, epsabs=1e-12):
    """Residue of dh at an end and the logarithmic growth -Re(residue).

    The loop winds once around the puncture on the surface, so the chart
    circle is run once per sheet meeting there.  At z = infinity the loop is
    clockwise in the chart, which makes the result the residue at infinity.
    """
    p = _puncture(b, puncture)
    c = end_cycle(b, p)
    res = form_integral(b, c.path, lambda z, u: b.omega(z, u), epsabs) / (TWO_PI * 1j)
    return complex(res), float(-res.real)


def end_report(b: WeierstrassBundle, puncture, epsabs=1e-12, with_torque=True
               ) -> ResidueReport:
    p = _puncture(b, puncture)
    c = end_cycle(b, p)
    full = path_integral(b, c.path, epsabs)
    res = full / (TWO_PI * 1j)
    f = -full.imag
    torque_v = axis = None
    if with_torque:
        try:
            torque_v = torque(b, c)
            axis = end_axis_from(torque_v, f)
        except (ZeroFluxAxisUndefined, NotImplementedError):
            axis = None
    e = p.ramification
    return ResidueReport(p.id, complex(res[2]), complex(res[2]) / e, e,
                         float(-res[2].real), complex(res[0]), complex(res[1]),
                         f, torque_v, axis)


# ---------------------------------------------------------------------------
# immersion along cycles and torque

def _base_to(b: WeierstrassBundle, z1: complex) -> ChartPath:
    """A path from the base point of the bundle to z1 (closed upper half
    plane, sheet of uhp_sheet)."""
    curve = b.domain
    z0 = complex(b.base.z)
    if curve.curve_kind == PLANAR:
        pcs = _planar_route(curve, z0, complex(z1))
    else:
        e = curve.ramification(z0)
        pcs = (uhp_ray(curve, z1, power=max(e, 1), z0=z0),)
    return ChartPath((z0, z1), b.base, False, pcs)


def _planar_route(curve, z0, z1):
    """Straight segment, or a two-segment detour through the upper half plane
    when the segment passes near a puncture."""
    pts = curve.avoid_points()
    clear = 1e-3

    def ok(a, c):
        return all(_segment_distance(a, c, p) > clear for p in pts)

    if ok(z0, z1):
        return (line_piece(curve, z0, z1, 0j),)
    mid = 0.5 * (z0 + z1)
    d = max(abs(z1 - z0), 1.0) * 0.5
    for _ in range(12):
        w = mid + 1j * d
        if ok(z0, w) and ok(w, z1):
            return (line_piece(curve, z0, w, 0j), line_piece(curve, w, z1, 0j))
        d *= 1.7
    raise PathClearanceError("no clear route from the base point", target=str(z1))


def point_on_cycle_X(b: WeierstrassBundle, c: Cycle, epsabs=QUAD_TOL) -> np.ndarray:
    """X at the start of a cycle, reached through the upper half plane."""
    pcs = c.path.pieces
    (zs, _us), _ = pcs[0].endpoints()
    curve = b.domain
    if c.label.startswith("end_loop(") and curve.curve_kind != PLANAR:
        # go up to the top of the loop circle and come down along it
        pid = c.label[len("end_loop("):-1]
        p = b.puncture(pid)
        center = 0j if _isinf(p.z) else p.z
        r = abs(zs - center)
        zt = center + 1j * r
        path1 = _base_to(b, zt)
        path2 = ChartPath((zt, zs), SurfacePoint(zt), False,
                          (uhp_arc(curve, center, r, math.pi / 2, 0.0),))
        X = path_integral(b, path1, epsabs).real + path_integral(b, path2, epsabs).real
    else:
        X = path_integral(b, _base_to(b, zs), epsabs).real
    return X + np.asarray(b.info.get("base_X", (0.0, 0.0, 0.0)), float)


def _panel_values(b, pc, a, c, deg):
    x = np.cos(np.pi * np.arange(deg + 1) / deg)[::-1]        # Chebyshev extrema
    t = 0.5 * (a + c) + 0.5 * (c - a) * x
    z, u, dz = pc.evaluate(t)
    f = b.phi(z, u) * dz                                       # (3, n)
    return x, f * 0.5 * (c - a)


def cycle_trace(b: WeierstrassBundle, c: Cycle, X0, panels=16, deg=32):
    """X and the conormal density along a cycle by Chebyshev panels.

    Returns (X at the panel nodes, -Im(Phi) per unit parameter, node weights)
    with the nodes of all panels concatenated.
    """
    Xs, Ns, Ws = [], [], []
    X = np.asarray(X0, float).copy()
    for pc in c.path.pieces:
        edges = np.linspace(pc.t0, pc.t1, panels + 1)
        for a, e in zip(edges[:-1], edges[1:]):
            x, f = _panel_values(b, pc, a, e, deg)
            coef = C.chebfit(x, f.T, deg)
            anti = C.chebint(coef, lbnd=-1.0)
            Xn = X[:, None] + C.chebval(x, anti).real
            # Clenshaw-Curtis weights from the same basis
            w = _cc_weights(deg)
            Xs.append(Xn)
            Ns.append(-f.imag)
            Ws.append(w)
            X = X + C.chebval(1.0, anti).real
    return np.concatenate(Xs, axis=1), np.concatenate(Ns, axis=1), np.concatenate(Ws)


_CC = {}


def _cc_weights(n):
    if n not in _CC:
        x = np.cos(np.pi * np.arange(n + 1) / n)[::-1]
        V = C.chebvander(x, n)
        # integrals of T_j over [-1, 1]
        j = np.arange(n + 1)
        ints = np.where(j % 2 == 0, 2.0 / (1.0 - j.astype(float) ** 2 + (j == 1)), 0.0)
        _CC[n] = np.linalg.solve(V.T, ints)
    return _CC[n]


def torque(b: WeierstrassBundle, c: Cycle, base=(0.0, 0.0, 0.0), X0=None) -> np.ndarray:
    """Torque_W = closed integral of (X - W) wedge nu ds along the cycle."""
    if X0 is None:
        X0 = point_on_cycle_X(b, c)
    X, nu, w = cycle_trace(b, c, X0)
    W = np.asarray(base, float)[:, None]
    return np.sum(np.cross((X - W).T, nu.T) * w[:, None], axis=0)


def torque_and_flux(b: WeierstrassBundle, c: Cycle, base=(0.0, 0.0, 0.0), X0=None):
    if X0 is None:
        X0 = point_on_cycle_X(b, c)
    X, nu, w = cycle_trace(b, c, X0)
    W = np.asarray(base, float)[:, None]
    T = np.sum(np.cross((X - W).T, nu.T) * w[:, None], axis=0)
    return T, nu @ w


def end_axis_from(T0, f) -> np.ndarray:
    f3 = float(f[2])
    if abs(f3) < 1e-9:
        raise ZeroFluxAxisUndefined("end flux vanishes; the axis is undefined")
    return np.array([-T0[1] / f3, T0[0] / f3])


def end_axis(b: WeierstrassBundle, puncture) -> np.ndarray:
    """Horizontal offset W of the vertical line on which the end torque vanishes."""
    c = end_cycle(b, _puncture(b, puncture))
    T0, f = torque_and_flux(b, c)
    return end_axis_from(T0, f)


# ---------------------------------------------------------------------------
# full report

def period_report(b: WeierstrassBundle, epsabs=QUAD_TOL, with_torque=True) -> PeriodReport:
    cycles = []
    for c in b.basis:
        full = path_integral(b, c.path, epsabs)
        cycles.append(CyclePeriod(c.label, full.real, full, -full.imag))
    ends = []
    for p in b.punctures:
        ends.append(end_report(b, p, with_torque=with_torque))
    rsum = sum((e.residue for e in ends), 0j)
    gsum = sum(e.growth for e in ends)
    maxp = max([float(np.max(np.abs(c.period))) for c in cycles] + [0.0])
    balance = None
    axes = [(e.growth, e.axis) for e in ends if e.axis is not None]
    if with_torque and axes:
        balance = sum(a * W for a, W in axes)
    return PeriodReport(b.name, tuple(cycles), tuple(ends), rsum, gsum, maxp,
                        maxp < PERIOD_TOL, balance)


# ---------------------------------------------------------------------------
# the E integrals and the family solver

def _E_single(k, gam, a, epsabs):
    S = math.sqrt(gam)

    def f(s):
        s2 = s * s
        return 2.0 * s * math.sqrt(max(math.sin(2 * gam - s2) * math.sin(s2), 0.0)) \
            * math.cos(a * (gam - s2))

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, 0.0, S, epsabs=epsabs, epsrel=1e-14, limit=400)
        except integrate.IntegrationWarning:
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(f, 0.0, S, epsabs=epsabs, epsrel=1e-14, limit=400)
            if err > 10 * epsabs:
                raise QuadratureNoConverge("E integral did not converge", error_estimate=err)
    return val


def E_integrals(k: int, gamma: float, epsabs=1e-13):
    """(E_plus, E_minus) with E_-+ = int_0^gamma sqrt(cos^2 phi - cos^2 gamma)
    cos((1 -+ 2/k) phi) dphi.

    phi = gamma - s^2 turns the square-root endpoint into a smooth integrand:
    cos^2 phi - cos^2 gamma = sin(gamma + phi) sin(gamma - phi).
    """
    if not 0.0 < gamma < math.pi / 2:
        raise ValueError("gamma must lie in (0, pi/2)")
    ep = _E_single(k, gamma, 1.0 + 2.0 / k, epsabs)
    em = _E_single(k, gamma, 1.0 - 2.0 / k, epsabs)
    return ep, em


@dataclass(frozen=True)
class FamilySolution:
    k: int
    alpha: float
    x: float
    m: float
    rho: float
    M: float
    E_plus: float
    E_minus: float
    E_plus_tilde: float
    E_minus_tilde: float
    C1: float
    C2: float
    Q1: float
    Q2: float
    residues: tuple             # (bottom, middle, top), z treated as coordinate
    growth: tuple               # (bottom, middle, top) logarithmic growth
    growth_condition_ok: bool
    flat_middle: bool
    compatibility_residual: float
    ratio_residual: float

    @property
    def ordering_ok(self) -> bool:
        r_b, r_m, r_t = self.residues
        return r_b < 0 <= r_m < r_t


def _m_from_compat(k, A, B, r, rt):
    # ((1/m - m) + B) (k+1)/(k-1) (rt - r) = 2A, solved for m >= 0
    d = rt - r
    if d <= 0.0:
        return 0.0, math.inf
    M = 2.0 * A * (k - 1) / ((k + 1) * d) - B
    # m = -M/2 + sqrt(1 + M^2/4), written without cancellation
    m = 1.0 / (M / 2.0 + math.sqrt(1.0 + M * M / 4.0)) if M > 0 else \
        -M / 2.0 + math.sqrt(1.0 + M * M / 4.0)
    return m, M


def solve_family(k: int, alpha: float) -> FamilySolution:
    """Solve the two horizontal period conditions of M_{k,x} for (m, rho)."""
    if not (math.pi / 4 - 1e-15 <= alpha < math.pi / 2):
        raise DegenerateAlpha("alpha must lie in [pi/4, pi/2)", alpha=alpha)
    if k < 2:
        raise DegenerateAlpha("k must be at least 2", k=k)
    curve = mkx_curve(k, alpha)
    x, A, B = curve.x, curve.A, curve.B
    at = math.pi / 2 - alpha
    ep, em = E_integrals(k, alpha)
    ept, emt = E_integrals(k, at)
    r, rt = ep / em, ept / emt
    if alpha == math.pi / 4 or x == 1.0:
        m, M = 0.0, math.inf
    else:
        m, M = _m_from_compat(k, A, B, r, rt)
    c = 2.0 / k * A
    C1 = c * (k - 1) * em
    C2 = c * (k - 1) * emt
    Q1 = c * ((1 - m * m) * (k + 1) * ep + B * m * (k + 1) * ep + A * m * (k - 1) * em)
    Q2 = c * ((1 - m * m) * (k + 1) * ept + B * m * (k + 1) * ept - A * m * (k - 1) * emt)
    rho2 = Q1 / C1
    if not rho2 > 0:
        raise DegenerateAlpha("rho^2 is not positive", rho2=rho2)
    # compatibility multiplied through by m so that m = 0 is admissible
    compat = abs(((1 - m * m) + B * m) * (k + 1) * (rt - r) - 2 * A * (k - 1) * m) \
        / (2 * A * (k - 1))
    ratio_res = abs(Q1 / C1 - Q2 / C2) / abs(Q1 / C1)
    res = (-(m * x + 1.0), m * (x + 1.0 / x), 1.0 - m / x)
    growth = tuple(-k * v for v in res)
    flat = m == 0.0
    ok = True if flat else (1.0 / m > 2.0 / x + x)
    return FamilySolution(k, float(alpha), x, m, math.sqrt(rho2),
                          (1.0 / m - m) if m > 0 else math.inf,
                          ep, em, ept, emt, C1, C2, Q1, Q2, res, growth, bool(ok), flat,
                          float(compat), float(ratio_res))


# ---------------------------------------------------------------------------
# reduction identities by contour quadrature

def verify_reduction_identities(k: int, alpha: float, m: float, epsabs=1e-13) -> dict:
    """Compare direct contour integrals over gamma1 with their closed forms
    in E_+ and E_-.

    The closed forms count the symmetric arc of gamma1 once per half, so the
    direct integrals over the arc are halved before comparing.  Returns
    name -> (direct, closed form, relative error).
    """
    curve = mkx_curve(k, alpha)
    x, A, B = curve.x, curve.A, curve.B
    ep, em = E_integrals(k, alpha)
    c = 2.0 / k * A
    arc = gamma1_arc(curve)

    class _B:                                   # minimal bundle facade for form_integral
        domain = curve
    fb = _B()

    def integ(form):
        return 0.5 * form_integral(fb, arc, form, epsabs)

    g1dh = integ(lambda z, u: u ** (k - 1))
    dh_g1 = integ(lambda z, u: u ** (k + 1) * (m * z + 1) ** 2 / z ** 2)
    uk1 = integ(lambda z, u: u ** (k + 1))
    zdu = integ(lambda z, u: z * u * curve.dlogF(z) / k)

    C1 = c * (k - 1) * em
    Q1 = c * ((1 - m * m) * (k + 1) * ep + B * m * (k + 1) * ep + A * m * (k - 1) * em)
    out = {}

    def put(name, direct, closed):
        out[name] = (float(direct), float(closed),
                     abs(direct - closed) / max(abs(closed), 1e-300))

    R = (1j * uk1).real
    Z = (1j * zdu).real
    Q1d = (-1j * dh_g1).real
    put("C1 = Re int i g1 dh", (1j * g1dh).real, C1)
    put("2 Re int i u^(k+1) dz", 2 * R, 4 * (k + 1) / k * A * ep)
    put("2 Re int i z du", 2 * Z, -4.0 / k * A * em)
    put("Q1 = Re int -i dh/g1", Q1d, Q1)
    # dh/g1 ~ (m^2 - 1) u^(k+1) dz + m [(k-1) A z du - B u^(k+1) dz]
    put("Q1 from parts", (1 - m * m) * R + m * B * R - m * (k - 1) * A * Z, Q1d)
    return out


# ---------------------------------------------------------------------------
# Chen-Gackstatter

def chen_gackstatter_integrals():
    """The two positive integrals over (-1, 0) whose ratio is rho^2.

    Algebraic endpoint weights take care of the square-root singularities.
    """
    # int_{-1}^0 sqrt((t^2-1)/t) dt = int sqrt(1-t) (t+1)^(1/2) (-t)^(-1/2) dt
    I1, _ = integrate.quad(lambda t: math.sqrt(1.0 - t), -1.0, 0.0, weight="alg",
                           wvar=(0.5, -0.5), epsabs=1e-14, epsrel=1e-14)
    # int_{-1}^0 sqrt(t/(t^2-1)) dt = int (1-t)^(-1/2) (t+1)^(-1/2) (-t)^(1/2) dt
    I2, _ = integrate.quad(lambda t: 1.0 / math.sqrt(1.0 - t), -1.0, 0.0, weight="alg",
                           wvar=(-0.5, 0.5), epsabs=1e-14, epsrel=1e-14)
    return I1, I2


def chen_gackstatter_rho() -> float:
    I1, I2 = chen_gackstatter_integrals()
    return math.sqrt(I1 / I2)


def chen_gackstatter_segment_period(rho: float) -> float:
    """Re int_0^{-1} (g^-1 - g) dh on the lift of [-1, 0] where gamma > 0."""
    I1, I2 = chen_gackstatter_integrals()
    # int_0^{-1} = -int_{-1}^0
    return -(I1 / rho - rho * I2)


# ---------------------------------------------------------------------------
# monotonicity of E_+/E_-

@dataclass(frozen=True)
class MonotonicityReport:
    k: int
    gammas: np.ndarray
    ratios: np.ndarray
    max_step: float
    low_limit: float
    high_limit: float
    low_error: float
    high_error: float


def verify_monotonicity(k: int, n_samples: int = 100, edge=1e-3) -> MonotonicityReport:
    if n_samples < 10:
        raise ValueError("n_samples must be at least 10")
    gam = np.linspace(edge, math.pi / 2 - edge, n_samples)
    ratios = np.array([np.divide(*E_integrals(k, g)) for g in gam])
    steps = np.diff(ratios)
    if np.any(steps >= 0):
        i = int(np.argmax(steps))
        raise MonotonicityViolated("E+/E- is not strictly decreasing",
                                   gamma=float(gam[i]), step=float(steps[i]))
    lo, hi = ratios[0], ratios[-1]
    lo_err, hi_err = abs(lo - 1.0), abs(hi - (k - 1) / (k + 1))
    if lo_err > 1e-3 or hi_err > 1e-3:
        raise MonotonicityViolated("endpoint limits not reached",
                                   low_error=lo_err, high_error=hi_err)
    return MonotonicityReport(k, gam, ratios, float(steps.max()), float(lo), float(hi),
                              float(lo_err), float(hi_err))
