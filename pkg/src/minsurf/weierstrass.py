"""Weierstrass data and the geometry it induces.

A bundle stores g and the chart density omega of dh = omega dz as vectorised
callables of (z, u).  Associate-family rotations and the Lopez-Ros scaling
are kept as multipliers so the underlying data stay untouched.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import quadrature
from .errors import SingularPoint
from .riemann_domain import (ChartPath, Cycle, FamilyCurve, Puncture,
                             SurfacePoint, path_from_points)
from .tolerances import ANGLE_TOL, QUAD_TOL, ROUNDOFF_REL


@dataclass(frozen=True, eq=False)
class WeierstrassBundle:
    name: str
    domain: FamilyCurve
    g_fn: Callable
    omega_fn: Callable
    dlogg_fn: Callable
    punctures: tuple = ()
    genus: int = 0
    symmetry: tuple = ()
    basis: tuple = ()
    params: dict = field(default_factory=dict)
    base: SurfacePoint = SurfacePoint(1 + 0j)
    dh_phase: complex = 1 + 0j
    g_scale: float = 1.0
    info: dict = field(default_factory=dict)

    # -- vectorised evaluators -------------------------------------------
    def g(self, z, u=0j):
        return self.g_scale * self.g_fn(np.asarray(z, dtype=complex),
                                        np.asarray(u, dtype=complex))

    def omega(self, z, u=0j):
        return self.dh_phase * self.omega_fn(np.asarray(z, dtype=complex),
                                             np.asarray(u, dtype=complex))

    def dlogg(self, z, u=0j):
        return self.dlogg_fn(np.asarray(z, dtype=complex), np.asarray(u, dtype=complex))

    def phi(self, z, u=0j):
        """The three densities of Phi per dz, stacked on the first axis."""
        g = self.g(z, u)
        w = self.omega(z, u)
        with np.errstate(divide="ignore", invalid="ignore"):
            ig = 1.0 / g
            return np.stack([0.5 * (ig - g) * w, 0.5j * (ig + g) * w, w])

    def puncture(self, pid: str) -> Puncture:
        for p in self.punctures:
            if p.id == pid:
                return p
        raise KeyError(pid)


@dataclass(frozen=True)
class ImmersionSample:
    point: SurfacePoint
    X: np.ndarray
    N: np.ndarray
    K: float
    ds_density: float


def normal_from_g(g):
    """Inverse stereographic projection of the Gauss map (vectorised)."""
    g = np.asarray(g, dtype=complex)
    out = np.empty(g.shape + (3,))
    big = ~np.isfinite(g) | (np.abs(g) > 1e150)
    gg = np.where(big, 0, g)
    a2 = np.abs(gg) ** 2
    out[..., 0] = 2 * gg.real / (a2 + 1)
    out[..., 1] = 2 * gg.imag / (a2 + 1)
    out[..., 2] = (a2 - 1) / (a2 + 1)
    out[big] = (0.0, 0.0, 1.0)
    return out


def g_at(b: WeierstrassBundle, p: SurfacePoint) -> complex:
    """g at a surface point; punctures use their limit flags."""
    if p.is_puncture:
        pun = b.puncture(p.at_puncture)
        if pun.g_limit == "zero":
            return 0j
        if pun.g_limit == "pole":
            return complex(math.inf, 0)
        raise SingularPoint("no limit value recorded for this puncture")
    return complex(b.g(p.z, p.u))


def _check_regular(vals, p):
    if not np.all(np.isfinite(vals)):
        raise SingularPoint("Weierstrass data are singular in this chart", z=str(p.z))


def eval_phi(b: WeierstrassBundle, p: SurfacePoint) -> np.ndarray:
    if p.is_puncture:
        raise SingularPoint("Phi is not evaluated at punctures", puncture=p.at_puncture)
    vals = np.asarray(b.phi(p.z, p.u), dtype=complex).reshape(3)
    _check_regular(vals, p)
    return vals


def metric_density(b: WeierstrassBundle, p: SurfacePoint) -> float:
    """Line element factor: ds = 1/2 (|g| + 1/|g|) |omega| |dz|."""
    if p.is_puncture:
        raise SingularPoint("metric is not evaluated at punctures")
    g = complex(b.g(p.z, p.u))
    w = complex(b.omega(p.z, p.u))
    with np.errstate(divide="ignore", invalid="ignore"):
        val = 0.5 * (abs(g) + 1.0 / abs(g)) * abs(w) if g != 0 else math.inf
    if not math.isfinite(val) or val <= 0:
        raise SingularPoint("metric degenerates at this point", z=str(p.z))
    return float(val)


def gauss_curvature(b: WeierstrassBundle, p: SurfacePoint) -> float:
    if p.is_puncture:
        raise SingularPoint("curvature is not evaluated at punctures")
    K = gauss_curvature_array(b, p.z, p.u)
    if not np.isfinite(K):
        raise SingularPoint("curvature undefined in this chart", z=str(p.z))
    return float(K)


def gauss_curvature_array(b: WeierstrassBundle, z, u=0j):
    g = b.g(z, u)
    w = b.omega(z, u)
    dl = b.dlogg(z, u)
    a = np.abs(g)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = a + 1.0 / a
        return -16.0 / s ** 4 * np.abs(dl / w) ** 2


def immersion_sample(b: WeierstrassBundle, p: SurfacePoint, X=None) -> ImmersionSample:
    g = complex(b.g(p.z, p.u))
    N = normal_from_g(g)
    if X is None:
        X = np.full(3, np.nan)
    return ImmersionSample(p, np.asarray(X, float), N, gauss_curvature(b, p),
                           metric_density(b, p))


# ---------------------------------------------------------------------------
# path integrals

def _ensure_pieces(b: WeierstrassBundle, path: ChartPath) -> tuple:
    if path.pieces:
        return path.pieces
    if len(path.samples) < 2:
        return ()
    return path_from_points(b.domain, path.samples, path.start.u, path.closed).pieces


def _effective_tol(values, length, epsabs):
    # an absolute target below the roundoff of the integrand is unattainable;
    # floor it at ROUNDOFF_REL times (integrand scale x parameter length)
    scale = float(np.max(np.abs(values))) * abs(length) if np.size(values) else 0.0
    if not np.isfinite(scale):
        return epsabs
    return max(epsabs, ROUNDOFF_REL * scale)


def _probe(fun, t0, t1, m=33):
    t = np.linspace(t0, t1, m)
    return np.array([fun(ti) for ti in t])


def piece_integral(b: WeierstrassBundle, piece, epsabs=QUAD_TOL, limit=None):
    def f(t):
        z, u, dz = piece.evaluate(np.array([t]))
        return (b.phi(z, u)[:, 0] * dz[0])
    kw = {} if limit is None else {"limit": limit}
    eps = _effective_tol(_probe(f, piece.t0, piece.t1), piece.t1 - piece.t0, epsabs)
    return quadrature.adaptive(f, piece.t0, piece.t1, epsabs=eps, **kw)


def path_integral(b: WeierstrassBundle, path: ChartPath, epsabs=QUAD_TOL) -> np.ndarray:
    """Complex integral of Phi along a path (3 components)."""
    total = np.zeros(3, dtype=complex)
    for pc in _ensure_pieces(b, path):
        total += piece_integral(b, pc, epsabs)
    return total


def integrate_immersion(b: WeierstrassBundle, path: ChartPath, epsabs=QUAD_TOL) -> np.ndarray:
    """Re of the integral of Phi along the path."""
    return path_integral(b, path, epsabs).real


def form_integral(b: WeierstrassBundle, path: ChartPath, form, epsabs=QUAD_TOL) -> complex:
    """Integral of an arbitrary form f(z, u) dz along a path."""
    total = 0j
    for pc in _ensure_pieces(b, path):
        def f(t, pc=pc):
            z, u, dz = pc.evaluate(np.array([t]))
            return np.array([form(z, u)[0] * dz[0]])
        eps = _effective_tol(_probe(f, pc.t0, pc.t1), pc.t1 - pc.t0, epsabs)
        total += complex(quadrature.adaptive(f, pc.t0, pc.t1, epsabs=eps)[0])
    return total


# ---------------------------------------------------------------------------
# second fundamental form and curve types

def second_form(b: WeierstrassBundle, p: SurfacePoint, tangent: complex) -> float:
    """<S(V), V> = Re{(dg/g)(V) dh(V)} for a chart tangent vector V."""
    q = _quadratic(b, p.z, p.u, tangent)
    if not np.isfinite(q):
        raise SingularPoint("second fundamental form undefined here", z=str(p.z))
    return float(np.real(q))


def _quadratic(b, z, u, V):
    return b.dlogg(z, u) * b.omega(z, u) * np.asarray(V, dtype=complex) ** 2


def classify_curve(b: WeierstrassBundle, path: ChartPath, angle_tol=ANGLE_TOL,
                   per_piece=32) -> str:
    """principal if (dg/g)(V) dh(V) is real along the path, asymptotic if
    it is imaginary, neither otherwise."""
    vals = []
    for pc in _ensure_pieces(b, path):
        t = np.linspace(pc.t0, pc.t1, per_piece)
        z, u, dz = pc.evaluate(t)
        vals.append(_quadratic(b, z, u, dz))
    q = np.concatenate(vals)
    if not np.all(np.isfinite(q)):
        raise SingularPoint("second fundamental form undefined on the path")
    q = q[np.abs(q) > 0]
    if q.size == 0:
        return "neither"
    ang = np.mod(np.angle(q), np.pi)
    dev_real = np.minimum(ang, np.pi - ang)
    dev_imag = np.abs(ang - np.pi / 2)
    if np.all(dev_real <= angle_tol):
        return "principal"
    if np.all(dev_imag <= angle_tol):
        return "asymptotic"
    return "neither"


# ---------------------------------------------------------------------------
# deformations

def associate(b: WeierstrassBundle, theta: float) -> WeierstrassBundle:
    """Associate surface with data {g, e^{i theta} dh}."""
    params = dict(b.params)
    params["theta"] = float(params.get("theta", 0.0)) + float(theta)
    return replace(b, dh_phase=b.dh_phase * cmath.exp(1j * theta), params=params,
                   name=b.name if theta == 0 else f"{b.name}_assoc")


def conjugate(b: WeierstrassBundle) -> WeierstrassBundle:
    """Conjugate surface X* = -X_{pi/2}, i.e. data {g, -i dh}."""
    out = associate(b, math.pi / 2)
    return replace(out, dh_phase=-out.dh_phase, name=f"{b.name}_conjugate")


def lopez_ros(b: WeierstrassBundle, lam: float) -> WeierstrassBundle:
    """Lopez-Ros deformation g -> lam g, dh unchanged."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    params = dict(b.params)
    params["lambda"] = float(params.get("lambda", 1.0)) * lam
    return replace(b, g_scale=b.g_scale * lam, params=params)


def lopez_ros_density(b: WeierstrassBundle, lam: float, p: SurfacePoint) -> float:
    """1/2 (lam^-1 |g|^-1 + lam |g|) |omega| written directly from the data of b."""
    g = abs(complex(b.g(p.z, p.u)))
    w = abs(complex(b.omega(p.z, p.u)))
    return 0.5 * (1.0 / (lam * g) + lam * g) * w
