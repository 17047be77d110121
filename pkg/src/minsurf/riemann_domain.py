"""Concrete Riemann surfaces over the z-chart.

Every domain handled here is a cyclic cover of the z-sphere,

    u**n = C * prod_j (z - q_j)**e_j,

which covers the three cases the library needs:

* ``mkx``: u**k = -(x + 1/x) z / ((z - x)(z + 1/x)), the k-fold cover
  carrying the three-ended family,
* ``chen_gackstatter`` and ``double_cover``: w**2 = P(z) hyperelliptic
  tori,
* ``planar``: no relation at all (a domain in the sphere).

Punctures are explicit sentinel points and never huge floats.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (AmbiguousSheet, NoRootConverged, PathClearanceError,
                     SheetJumpDetected)
from .tolerances import (CLEARANCE_MIN, CONTINUITY_TOL, MIN_STEP, TIE_TOL,
                         TOL_CURVE)

INF = complex(math.inf, 0.0)

MKX = "mkx"
CHEN_GACKSTATTER = "chen_gackstatter"
DOUBLE_COVER = "double_cover"
PLANAR = "planar"


def _isinf(z) -> bool:
    return cmath.isinf(complex(z))


# ---------------------------------------------------------------------------
# curves and points

@dataclass(frozen=True)
class FamilyCurve:
    """Algebraic curve over the z-chart.

    ``k`` is the number of sheets for mkx curves; ``alpha`` and ``x`` are only
    meaningful for them.  ``branch_points`` lists the roots of P(z) for double
    covers and ``planar_punctures`` the removed points of a planar domain.
    """
    k: int = 2
    alpha: float = math.pi / 4
    curve_kind: str = MKX
    branch_points: tuple = ()
    planar_punctures: tuple = ()
    x: float = field(init=False)

    def __post_init__(self):
        x = float("nan")
        if self.curve_kind == MKX:
            x = 1.0 / math.tan(self.alpha)
            if abs(x - 1.0) < 1e-15:
                x = 1.0
        object.__setattr__(self, "x", x)
        if self.curve_kind == MKX:
            if self.k < 2:
                raise ValueError("mkx curves need k >= 2")
            if not (math.pi / 4 - 1e-15 <= self.alpha < math.pi / 2):
                raise ValueError("alpha must lie in [pi/4, pi/2)")

    # -- the radical form u**n = C prod (z - q)**e -------------------------
    @property
    def n(self) -> int:
        if self.curve_kind == MKX:
            return self.k
        if self.curve_kind in (CHEN_GACKSTATTER, DOUBLE_COVER):
            return 2
        return 1

    @property
    def sheets(self) -> int:
        return self.n

    @property
    def factors(self) -> tuple:
        """Pairs (q, e) of the radical form."""
        if self.curve_kind == MKX:
            x = self.x
            return ((0.0, 1), (x, -1), (-1.0 / x, -1))
        if self.curve_kind == CHEN_GACKSTATTER:
            return ((-1.0, 1), (0.0, 1), (1.0, 1))
        if self.curve_kind == DOUBLE_COVER:
            return tuple((complex(q), 1) for q in self.branch_points)
        return ()

    @property
    def const(self) -> complex:
        if self.curve_kind == MKX:
            return -(self.x + 1.0 / self.x)
        return 1.0

    @property
    def A(self) -> float:
        return self.x + 1.0 / self.x

    @property
    def B(self) -> float:
        return self.x - 1.0 / self.x

    def F(self, z):
        """Right hand side u**n as a function of z (vectorised)."""
        z = np.asarray(z, dtype=complex)
        out = np.full(z.shape, self.const, dtype=complex)
        for q, e in self.factors:
            out = out * (z - q) ** e
        return out

    def dlogF(self, z):
        """d/dz log F."""
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=complex)
        for q, e in self.factors:
            out = out + e / (z - q)
        return out

    def z_branch_values(self) -> list:
        """Finite z-values over which the fibre degenerates."""
        if self.curve_kind == PLANAR:
            return []
        return [complex(q) for q, _ in self.factors]

    def ramification(self, z) -> int:
        """Number of sheets meeting over z (1 at generic points)."""
        if self.curve_kind == PLANAR:
            return 1
        if _isinf(z):
            tot = sum(e for _, e in self.factors)
            return self.n // math.gcd(self.n, abs(tot)) if tot % self.n else 1
        for q, e in self.factors:
            if abs(complex(z) - q) == 0.0:
                return self.n // math.gcd(self.n, abs(e))
        return 1

    def avoid_points(self) -> list:
        """Points a continuation path must keep clear of."""
        pts = list(self.z_branch_values())
        if self.curve_kind == MKX:
            # branch points of the degree-2 function u
            pts += [1j, -1j]
        if self.curve_kind == PLANAR:
            pts += [complex(p) for p in self.planar_punctures if not _isinf(p)]
        return pts


def mkx_curve(k: int, alpha: float | None = None, x: float | None = None) -> FamilyCurve:
    if alpha is None:
        if x is None:
            raise ValueError("give alpha or x")
        alpha = math.atan2(1.0, x)
    return FamilyCurve(k=int(k), alpha=float(alpha), curve_kind=MKX)


def chen_gackstatter_curve() -> FamilyCurve:
    return FamilyCurve(k=2, curve_kind=CHEN_GACKSTATTER, branch_points=(-1.0, 0.0, 1.0))


def double_cover(branch_points: Sequence[complex], punctures: Sequence[complex] = ()
                 ) -> FamilyCurve:
    return FamilyCurve(k=2, curve_kind=DOUBLE_COVER,
                       branch_points=tuple(complex(b) for b in branch_points),
                       planar_punctures=tuple(complex(p) for p in punctures))


def planar_domain(punctures: Sequence[complex] = ()) -> FamilyCurve:
    return FamilyCurve(k=1, curve_kind=PLANAR,
                       planar_punctures=tuple(complex(p) for p in punctures))


@dataclass(frozen=True)
class SurfacePoint:
    """A point of the surface: chart value z and fibre coordinate u."""
    z: complex
    u: complex = 0j
    at_puncture: Optional[str] = None

    @property
    def is_puncture(self) -> bool:
        return self.at_puncture is not None


@dataclass(frozen=True)
class Puncture:
    """A removed point, with the data needed to treat it exactly."""
    id: str
    z: complex
    u: complex = 0j
    ramification: int = 1
    end_type: str = "catenoid"      # catenoid | flat | non_embedded
    limit_normal: str = "up"        # up | down (value of g: down <-> g = 0)
    g_limit: str = "zero"           # zero | pole | finite

    def point(self) -> SurfacePoint:
        return SurfacePoint(self.z, self.u, self.id)


def curve_residual(curve: FamilyCurve, z, u):
    """Relative residual of u**n = F(z) in polynomial-cleared form."""
    if curve.curve_kind == PLANAR:
        return np.zeros(np.shape(z))
    z = np.asarray(z, dtype=complex)
    u = np.asarray(u, dtype=complex)
    num = u ** curve.n
    rhs = np.full(z.shape, curve.const, dtype=complex)
    for q, e in curve.factors:
        if e > 0:
            rhs = rhs * (z - q) ** e
        else:
            num = num * (z - q) ** (-e)
    scale = np.abs(num) + np.abs(rhs)
    res = np.abs(num - rhs)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(scale > 0, res / np.where(scale > 0, scale, 1.0), 0.0)
    return out


def fiber(curve: FamilyCurve, z: complex) -> np.ndarray:
    """All values of the fibre coordinate over a finite z."""
    if curve.curve_kind == PLANAR:
        return np.zeros(1, dtype=complex)
    Fz = complex(curve.F(z))
    n = curve.n
    if Fz == 0:
        return np.zeros(n, dtype=complex)
    r = abs(Fz) ** (1.0 / n)
    a = cmath.phase(Fz)
    return r * np.exp(1j * (a + 2 * np.pi * np.arange(n)) / n)


def _newton(curve: FamilyCurve, z: complex, u: complex, iters=8) -> complex:
    # Newton on A u**-k - (1/z - z) - B for mkx, on u**n - F otherwise
    if curve.curve_kind == MKX:
        k, A, B = curve.k, curve.A, curve.B
        target = 1.0 / z - z + B
        for _ in range(iters):
            h = A * u ** (-k) - target
            dh = -k * A * u ** (-k - 1)
            step = h / dh
            u = u - step
            if abs(step) <= 1e-16 * abs(u):
                break
        return u
    Fz = complex(curve.F(z))
    n = curve.n
    for _ in range(iters):
        step = (u ** n - Fz) / (n * u ** (n - 1))
        u = u - step
        if abs(step) <= 1e-16 * abs(u):
            break
    return u


def puncture_at(curve: FamilyCurve, z: complex) -> Optional[Puncture]:
    """The puncture sitting over z, if z is a puncture of the curve."""
    for p in curve_punctures(curve):
        if _isinf(p.z) and _isinf(z):
            return p
        if not _isinf(p.z) and not _isinf(z) and \
                abs(p.z - complex(z)) <= 1e-13 * max(1.0, abs(p.z)):
            return p
    return None


def curve_punctures(curve: FamilyCurve) -> list:
    """Geometric punctures of the curve (end data is filled by bundles)."""
    if curve.curve_kind == MKX:
        k, x = curve.k, curve.x
        return [Puncture("bottom", complex(x), INF, k),
                Puncture("top", complex(-1.0 / x), INF, k),
                Puncture("middle", INF, 0j, k)]
    if curve.curve_kind == CHEN_GACKSTATTER:
        return [Puncture("infinity", INF, INF, 2)]
    if curve.curve_kind in (PLANAR, DOUBLE_COVER):
        out = []
        for i, p in enumerate(curve.planar_punctures):
            pid = "infinity" if _isinf(p) else f"p{i}"
            z = INF if _isinf(p) else complex(p)
            u = 0j if curve.curve_kind == PLANAR else \
                (INF if _isinf(p) else (0j if curve.ramification(z) > 1 else INF))
            out.append(Puncture(pid, z, u, curve.ramification(z)))
        return out
    return []


def lift_point(curve: FamilyCurve, z: complex, sheet_hint: complex = 0j,
               tol=TOL_CURVE, tie_tol=TIE_TOL) -> SurfacePoint:
    """Lift a chart value to the surface, choosing the root nearest the hint."""
    z = complex(z)
    p = puncture_at(curve, z)
    if p is not None:
        return p.point()
    if _isinf(z):
        raise ValueError("z must be finite")
    if curve.curve_kind == PLANAR:
        return SurfacePoint(z, 0j)
    roots = fiber(curve, z)
    if np.all(roots == 0):
        # totally ramified finite point such as the saddle (0, 0)
        return SurfacePoint(z, 0j)
    refined = []
    for r in roots:
        try:
            rr = _newton(curve, z, complex(r))
        except ZeroDivisionError:
            continue
        if np.isfinite(rr) and curve_residual(curve, z, rr) <= tol:
            refined.append(rr)
    if not refined:
        raise NoRootConverged("Newton refinement failed for every root", z=str(z))
    refined = np.array(refined)
    d = np.abs(refined - sheet_hint)
    order = np.argsort(d)
    if len(order) > 1:
        scale = max(abs(refined[order[0]]), 1e-300)
        if abs(d[order[1]] - d[order[0]]) <= tie_tol * scale:
            raise AmbiguousSheet("two sheets are equally close to the hint", z=str(z))
    return SurfacePoint(z, complex(refined[order[0]]))


def root_spacing(curve: FamilyCurve, u: complex) -> float:
    if curve.n <= 1:
        return math.inf
    return 2.0 * abs(u) * math.sin(math.pi / curve.n)


# ---------------------------------------------------------------------------
# paths and pieces

class Piece:
    """A parameterised stretch of path on the surface.

    ``evaluate(t)`` returns (z, u, dz/dt) for an array of parameters in
    [t0, t1].
    """
    t0: float = 0.0
    t1: float = 1.0

    def evaluate(self, t):
        raise NotImplementedError

    def endpoints(self):
        z, u, _ = self.evaluate(np.array([self.t0, self.t1]))
        return (complex(z[0]), complex(u[0])), (complex(z[1]), complex(u[1]))

    def sample(self, m=64):
        t = np.linspace(self.t0, self.t1, m)
        z, u, _ = self.evaluate(t)
        return z, u


class RatioPiece(Piece):
    """Path z(t) with the sheet continued from a reference point.

    The fibre coordinate is u_ref * (F(z)/F(z_ref))**(1/n) with the principal
    root, which is exact as long as the ratio does not wind around 0 along
    the piece; constructors keep pieces short enough for that.
    """

    def __init__(self, curve, zfun, dzfun, t0, t1, u_ref):
        self.curve = curve
        self.zfun = zfun
        self.dzfun = dzfun
        self.t0, self.t1 = float(t0), float(t1)
        self.z_ref = complex(zfun(np.array([self.t0]))[0])
        self.u_ref = complex(u_ref)
        self.F_ref = complex(curve.F(self.z_ref)) if curve.n > 1 else 1.0

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        z = self.zfun(t)
        dz = self.dzfun(t)
        if self.curve.n == 1:
            return z, np.zeros_like(z), dz
        ratio = self.curve.F(z) / self.F_ref
        u = self.u_ref * ratio ** (1.0 / self.curve.n)
        return z, u, dz

    def max_winding(self, m=129) -> float:
        if self.curve.n == 1:
            return 0.0
        t = np.linspace(self.t0, self.t1, m)
        ratio = self.curve.F(self.zfun(t)) / self.F_ref
        return float(np.max(np.abs(np.angle(ratio))))


def line_piece(curve, z0, z1, u0) -> RatioPiece:
    z0, z1 = complex(z0), complex(z1)
    d = z1 - z0
    return RatioPiece(curve, lambda t: z0 + d * t, lambda t: np.full(np.shape(t), d),
                      0.0, 1.0, u0)


def arc_piece(curve, center, radius, th0, th1, u0) -> RatioPiece:
    c, r = complex(center), float(radius)
    return RatioPiece(curve, lambda t: c + r * np.exp(1j * t),
                      lambda t: 1j * r * np.exp(1j * t), th0, th1, u0)


class UnitaryPiece(Piece):
    """Half loop over the unitary locus |u| = 1 of an mkx curve.

    phi(t) = center + sigma * (half - t**2), t in [-sqrt(half), sqrt(half)].
    At t = 0 the path passes through the branch point of u where z = +-i and
    crosses from one root of z**2 + c z - 1 = 0 to the other; writing the
    discriminant as t**2 times a smooth factor keeps everything analytic.
    """

    def __init__(self, curve: FamilyCurve, center: float, half: float, sigma: int,
                 start_small: bool):
        self.curve = curve
        self.center, self.half, self.sigma = float(center), float(half), int(sigma)
        S = math.sqrt(self.half)
        self.t0, self.t1 = -S, S
        k, A = curve.k, curve.A
        self.phib = self.center + self.sigma * self.half
        cb = A * cmath.exp(-1j * k * self.phib) - curve.B
        self.cb = 2j if cb.imag > 0 else -2j
        self.h0 = complex(self._h(np.array([0.0]))[0])
        self.p0 = complex(self._p(np.array([0.0]))[0])
        # orient the square root so that t0 starts on the requested root
        z, _, _ = self._raw(np.array([self.t0]), 1.0)
        small = abs(z[0]) < 1.0
        self.sign = 1.0 if small == start_small else -1.0

    def _h(self, t):
        # (c - cb)/t**2 without cancellation
        k, A = self.curve.k, self.curve.A
        x = 1j * k * self.sigma * t * t
        with np.errstate(invalid="ignore", divide="ignore"):
            em = np.where(np.abs(x) > 1e-8, np.expm1(x) / np.where(x == 0, 1, x),
                          1.0 + x / 2)
        return A * np.exp(-1j * k * self.phib) * em * (1j * k * self.sigma)

    def _p(self, t):
        k, A = self.curve.k, self.curve.A
        phi = self.center + self.sigma * (self.half - t * t)
        return A * np.exp(-1j * k * phi) - self.curve.B + self.cb

    def _root(self, t):
        # sqrt(h * p) continued from t = 0; each factor turns by less than
        # pi/2 over the piece, so principal roots of the ratios are safe
        h, p = self._h(t), self._p(t)
        return (cmath.sqrt(self.h0) * np.sqrt(h / self.h0)
                * cmath.sqrt(self.p0) * np.sqrt(p / self.p0))

    def _raw(self, t, sign):
        k, A = self.curve.k, self.curve.A
        t = np.asarray(t, dtype=float)
        phi = self.center + self.sigma * (self.half - t * t)
        u = np.exp(1j * phi)
        c = A * u ** (-k) - self.curve.B
        root = self._root(t)
        sq = sign * t * root
        z = 0.5 * (-c + sq)
        # dz/dt = k A u^-k i phi'(t) z / sq, with phi'/sq = -2 sigma/(sign*root)
        dz = k * A * u ** (-k) * 1j * z * (-2.0 * self.sigma) / (sign * root)
        return z, u, dz

    def evaluate(self, t):
        return self._raw(t, getattr(self, "sign", 1.0))

    def max_winding(self, m=257) -> float:
        t = np.linspace(self.t0, self.t1, m)
        return float(max(np.max(np.abs(np.angle(self._h(t) / self.h0))),
                         np.max(np.abs(np.angle(self._p(t) / self.p0)))))


@dataclass(frozen=True)
class ChartPath:
    """Ordered chart samples, the starting surface point and closure flag.

    ``pieces`` optionally holds exact parameterisations used for quadrature;
    when it is empty the path is the polyline through ``samples``.
    """
    samples: tuple
    start: SurfacePoint
    closed: bool = False
    pieces: tuple = ()

    def reversed(self) -> "ChartPath":
        pcs = tuple(_ReversedPiece(p) for p in reversed(self.pieces))
        start = self.start
        if pcs:
            (z, u), _ = pcs[0].endpoints()
            start = SurfacePoint(z, u)
        return ChartPath(tuple(reversed(self.samples)), start, self.closed, pcs)


class _ReversedPiece(Piece):
    def __init__(self, piece):
        self.piece = piece
        self.t0, self.t1 = piece.t0, piece.t1

    def evaluate(self, t):
        s = self.t0 + self.t1 - np.asarray(t, dtype=float)
        z, u, dz = self.piece.evaluate(s)
        return z, u, -dz


@dataclass(frozen=True)
class Cycle:
    path: ChartPath
    label: str


@dataclass(frozen=True)
class SymmetryElement:
    kind: str          # reflection_f | rotation_tau_power
    j: int = 0


def _segment_distance(a: complex, b: complex, p: complex) -> float:
    d = b - a
    if d == 0:
        return abs(p - a)
    t = ((p - a) * d.conjugate()).real / abs(d) ** 2
    t = min(1.0, max(0.0, t))
    return abs(a + t * d - p)


def check_clearance(curve: FamilyCurve, samples, clearance=CLEARANCE_MIN):
    pts = curve.avoid_points()
    s = [complex(z) for z in samples]
    for a, b in zip(s[:-1], s[1:]):
        for p in pts:
            if _segment_distance(a, b, p) < clearance:
                raise PathClearanceError("path passes too close to a branch value",
                                         point=str(p))
    for a in s:
        for p in pts:
            if abs(a - p) < clearance:
                raise PathClearanceError("sample too close to a branch value",
                                         point=str(p))


def continue_branch(curve: FamilyCurve, path: ChartPath,
                    continuity_tol=CONTINUITY_TOL, min_step=MIN_STEP,
                    clearance=CLEARANCE_MIN) -> list:
    """Analytically continue the sheet of u along the samples of ``path``.

    Each step takes the root nearest the previous value; a step is halved
    while the jump exceeds ``continuity_tol`` times the local root spacing.
    """
    samples = [complex(z) for z in path.samples]
    check_clearance(curve, samples, clearance)
    if curve.curve_kind == PLANAR:
        return [SurfacePoint(z, 0j) for z in samples]
    u = complex(path.start.u)
    if curve_residual(curve, samples[0], u) > 1e-8:
        u = lift_point(curve, samples[0], u).u
    out = [SurfacePoint(samples[0], u)]
    for za, zb in zip(samples[:-1], samples[1:]):
        u = _advance(curve, za, zb, u, continuity_tol, min_step)
        out.append(SurfacePoint(zb, u))
    return out


def _nearest(curve, z, u_prev):
    roots = fiber(curve, z)
    d = np.abs(roots - u_prev)
    i = int(np.argmin(d))
    return complex(roots[i]), d


def _advance(curve, za, zb, u, continuity_tol, min_step):
    # advance from (za, u) to zb, halving the step where needed
    stack = [zb]
    cur = za
    while stack:
        target = stack[-1]
        cand, d = _nearest(curve, target, u)
        spacing = root_spacing(curve, cand)
        if spacing == 0 or d.min() <= continuity_tol * spacing:
            cand = _newton(curve, target, cand)
            u, cur = cand, target
            stack.pop()
            continue
        if abs(target - cur) < min_step:
            if d.min() > 0.5 * spacing:
                raise SheetJumpDetected("no root close to the previous sheet",
                                        z=str(target))
            u, cur = cand, target
            stack.pop()
            continue
        stack.append(0.5 * (cur + target))
    return u


def path_from_points(curve: FamilyCurve, samples, start_u: complex,
                     closed: bool = False) -> ChartPath:
    """Polyline path whose pieces carry the continued sheet."""
    samples = tuple(complex(z) for z in samples)
    start = lift_point(curve, samples[0], start_u) if curve.curve_kind != PLANAR \
        else SurfacePoint(samples[0])
    base = ChartPath(samples, start, closed)
    pts = continue_branch(curve, base)
    pieces = tuple(line_piece(curve, a.z, b.z, a.u) for a, b in zip(pts[:-1], pts[1:]))
    return ChartPath(samples, start, closed, pieces)


def apply_symmetry(sym: SymmetryElement, p: SurfacePoint, curve: FamilyCurve | None = None
                   ) -> SurfacePoint:
    """Reflection f(z, u) = (conj z, conj u) or rotation tau^j(z, u) = (z, eps^j u)."""
    if sym.kind == "reflection_f":
        if p.is_puncture:
            return p
        return SurfacePoint(complex(p.z).conjugate(), complex(p.u).conjugate())
    if sym.kind == "rotation_tau_power":
        if p.is_puncture:
            return p
        k = curve.n if curve is not None else 2
        eps = cmath.exp(-2j * math.pi / k)
        return SurfacePoint(p.z, eps ** (sym.j % k) * p.u)
    raise ValueError(f"unknown symmetry {sym.kind}")


def symmetry_group(curve: FamilyCurve) -> tuple:
    if curve.curve_kind == PLANAR:
        return (SymmetryElement("reflection_f"),)
    return (SymmetryElement("reflection_f"),) + tuple(
        SymmetryElement("rotation_tau_power", j) for j in range(1, curve.n))


# ---------------------------------------------------------------------------
# sheets over the upper half plane

def uhp_sheet(curve: FamilyCurve, z):
    """Continuous branch of u over the closed upper half plane.

    arg F is assembled from arguments of the linear factors, each taken in
    [0, pi] for Im z >= 0, so the branch has no cut inside the half plane.
    """
    z = np.asarray(z, dtype=complex)
    if curve.curve_kind == PLANAR:
        return np.zeros(z.shape, dtype=complex)
    arg = np.full(z.shape, cmath.phase(curve.const))
    mod = np.full(z.shape, abs(curve.const))
    for q, e in curve.factors:
        w = z - q
        arg = arg + e * np.arctan2(np.abs(w.imag), w.real)
        mod = mod * np.abs(w) ** e
    n = curve.n
    with np.errstate(divide="ignore", invalid="ignore"):
        out = mod ** (1.0 / n) * np.exp(1j * arg / n)
    return out


class SheetPiece(Piece):
    """Path in the closed upper half plane carried by the sheet of uhp_sheet.

    Endpoints may sit on branch values, which is what integration from a
    branched base point needs.
    """

    def __init__(self, curve, zfun, dzfun, t0=0.0, t1=1.0):
        self.curve = curve
        self.zfun, self.dzfun = zfun, dzfun
        self.t0, self.t1 = float(t0), float(t1)

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        z = self.zfun(t)
        return z, uhp_sheet(self.curve, z), self.dzfun(t)


def uhp_ray(curve, z1, power=1, z0=0j) -> SheetPiece:
    """z = z0 + (z1 - z0) t**power; power > 1 smooths a branched start."""
    z0, d = complex(z0), complex(z1) - complex(z0)
    return SheetPiece(curve, lambda t: z0 + d * t ** power,
                      lambda t: power * d * t ** (power - 1))


def uhp_arc(curve, center, radius, th0, th1) -> SheetPiece:
    c, r = complex(center), float(radius)
    return SheetPiece(curve, lambda t: c + r * np.exp(1j * t),
                      lambda t: 1j * r * np.exp(1j * t), th0, th1)


class SubPiece(Piece):
    """Restriction of a piece to a sub-interval."""

    def __init__(self, piece, t0, t1):
        self.piece = piece
        self.t0, self.t1 = float(t0), float(t1)

    def evaluate(self, t):
        return self.piece.evaluate(t)


def gamma1_arc(curve: FamilyCurve) -> ChartPath:
    """The symmetric arc of gamma1: u = e^{i phi} runs from 1 out to the
    branch point at phi = 2 alpha/k and back, z going from z1 to -1/z1."""
    first = unitary_cycle(curve, "gamma1").path.pieces[0]
    samples = _pieces_samples((first,), m=65)
    (z0, u0), _ = first.endpoints()
    return ChartPath(samples, SurfacePoint(z0, u0), False, (first,))


# ---------------------------------------------------------------------------
# homology

def _loop_pieces(curve, center, radius, u0, turns=1, orientation=1, nseg=16):
    pieces = []
    u = u0
    step = 2 * math.pi / nseg * orientation
    th = 0.0
    for _ in range(turns * nseg):
        pc = arc_piece(curve, center, radius, th, th + step, u)
        if step < 0:
            pc = _flip_interval(pc)
        pieces.append(pc)
        _, (z1, u) = pc.endpoints()
        th += step
    return tuple(pieces)


class _FlipInterval(Piece):
    # runs a piece defined on [a, b] with a > b over an increasing parameter
    def __init__(self, piece):
        self.piece = piece
        self.t0, self.t1 = 0.0, 1.0

    def evaluate(self, t):
        a, b = self.piece.t0, self.piece.t1
        s = a + (b - a) * np.asarray(t, dtype=float)
        z, u, dz = self.piece.evaluate(s)
        return z, u, dz * (b - a)


def _flip_interval(pc):
    return _FlipInterval(pc)


def _pieces_samples(pieces, m=33):
    zs = []
    for pc in pieces:
        z, _ = pc.sample(m)
        zs.extend(z[:-1].tolist())
    (z_end, _u) = pieces[-1].endpoints()[1]
    zs.append(z_end)
    return tuple(complex(z) for z in zs)


def end_loop(curve: FamilyCurve, puncture: Puncture, radius: float | None = None,
             start_u: complex | None = None) -> Cycle:
    """Positively oriented loop on the surface around one puncture.

    The chart circle is traversed once per sheet meeting at the puncture.
    At z = infinity the chart circle runs clockwise.
    """
    if radius is None:
        radius = end_loop_radius(curve, puncture)
    e = puncture.ramification
    if _isinf(puncture.z):
        center, orientation = 0j, -1
    else:
        center, orientation = complex(puncture.z), 1
    z0 = center + radius
    if start_u is None:
        start_u = complex(uhp_sheet(curve, z0))
    pieces = _loop_pieces(curve, center, radius, start_u, turns=e,
                          orientation=orientation)
    samples = _pieces_samples(pieces)
    path = ChartPath(samples, SurfacePoint(z0, start_u), True, pieces)
    return Cycle(path, f"end_loop({puncture.id})")


def end_loop_radius(curve: FamilyCurve, puncture: Puncture) -> float:
    others = [complex(q) for q in curve.avoid_points()]
    others += [p.z for p in curve_punctures(curve) if not _isinf(p.z)]
    if _isinf(puncture.z):
        far = max([abs(q) for q in others] + [1.0])
        return 4.0 * far
    d = [abs(q - puncture.z) for q in others if abs(q - puncture.z) > 0]
    return min([1.0] + [0.5 * v for v in d])


def unitary_cycle(curve: FamilyCurve, which: str) -> Cycle:
    """gamma1 or gamma2 as closed loops over |u| = 1.

    gamma1 is centred at arg u = 0 and spans the arc between the branch
    points at arg u = +-2 alpha/k; gamma2 is the image of gamma1 of the
    reciprocal curve under u -> e^{-i pi/k} u, z -> -z: the arc centred at
    arg u = -pi/k of half width (pi - 2 alpha)/k.
    """
    k, alpha = curve.k, curve.alpha
    if which == "gamma1":
        center, half = 0.0, 2 * alpha / k
    elif which == "gamma2":
        center, half = -math.pi / k, (math.pi - 2 * alpha) / k
    else:
        raise ValueError(which)
    first = UnitaryPiece(curve, center, half, +1, start_small=True)
    second = UnitaryPiece(curve, center, half, -1, start_small=False)
    pieces = (first, second)
    samples = _pieces_samples(pieces, m=129)
    (z0, u0), _ = first.endpoints()
    return Cycle(ChartPath(samples, SurfacePoint(z0, u0), True, pieces), which)


def _segment_loop(curve, a: float, b: float, width: float, nseg=24) -> Cycle:
    # loop around the real segment [a, b] as a chain of short arcs of an ellipse
    c = 0.5 * (a + b)
    ra = 0.5 * (b - a) + width
    rb = width

    def zfun_factory(th0):
        return (lambda t: c + ra * np.cos(t) + 1j * rb * np.sin(t),
                lambda t: -ra * np.sin(t) + 1j * rb * np.cos(t))

    th = np.linspace(0.0, 2 * math.pi, nseg + 1)
    z0 = c + ra
    u = complex(uhp_sheet(curve, z0))
    pieces = []
    for t0, t1 in zip(th[:-1], th[1:]):
        zf, dzf = zfun_factory(t0)
        pc = RatioPiece(curve, zf, dzf, t0, t1, u)
        pieces.append(pc)
        _, (_, u) = pc.endpoints()
    pieces = tuple(pieces)
    return Cycle(ChartPath(_pieces_samples(pieces), SurfacePoint(z0, pieces[0].u_ref),
                           True, pieces), f"loop[{a:g},{b:g}]")


def homology_basis(curve: FamilyCurve) -> list:
    """Cycles spanning the homology used by the period checks."""
    if curve.curve_kind == MKX:
        cycles = [unitary_cycle(curve, "gamma1"), unitary_cycle(curve, "gamma2")]
        cycles += [end_loop(curve, p) for p in curve_punctures(curve)]
        return cycles
    if curve.curve_kind == PLANAR:
        return [end_loop(curve, p) for p in curve_punctures(curve) if not _isinf(p.z)]
    if curve.curve_kind == CHEN_GACKSTATTER:
        return [_segment_loop(curve, -1.0, 0.0, 0.25), _segment_loop(curve, 0.0, 1.0, 0.25),
                end_loop(curve, curve_punctures(curve)[0])]
    if curve.curve_kind == DOUBLE_COVER:
        bp = sorted(complex(b).real for b in curve.branch_points)
        cycles = []
        for a, b in zip(bp[:-1], bp[1:]):
            gaps = [bp[i + 1] - bp[i] for i in range(len(bp) - 1)]
            cycles.append(_segment_loop(curve, a, b, 0.25 * min(gaps)))
        return cycles
    raise ValueError(curve.curve_kind)
