"""Ready-made Weierstrass bundles with their expected invariants."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ParamOutOfRange, UnknownEntry
from .periods import chen_gackstatter_rho, solve_family
from .riemann_domain import (INF, SurfacePoint, chen_gackstatter_curve, curve_punctures,
                             double_cover, homology_basis, mkx_curve, planar_domain,
                             symmetry_group, uhp_sheet)
from .weierstrass import WeierstrassBundle, associate, conjugate

FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    params: dict                 # name -> (default, description of range)
    expected: dict               # ground truth record
    description: str = ""

    def to_dict(self):
        return {"name": self.name,
                "params": {k: {"default": v[0], "range": v[1]} for k, v in self.params.items()},
                "expected": dict(self.expected),
                "description": self.description}


def _expected(degree, genus, ends, embedded, index=None, well_posed=True, ftc=True,
              notes=""):
    rec = {"total_curvature": -FOUR_PI * degree if (ftc and degree is not None) else None,
           "degree": degree, "genus": genus, "ends": ends, "embedded": embedded,
           "index": index, "well_posed": well_posed, "finite_total_curvature": ftc}
    if notes:
        rec["notes"] = notes
    return rec


# ---------------------------------------------------------------------------
# parameter handling

def _num(params, key, default):
    v = params.get(key, default)
    try:
        v = float(v)
    except (TypeError, ValueError):
        raise ParamOutOfRange(f"parameter {key} must be a number", param=key, value=str(v))
    if not math.isfinite(v):
        raise ParamOutOfRange(f"parameter {key} must be finite", param=key)
    return v


def _int(params, key, default, lo, hi=None):
    v = params.get(key, default)
    try:
        fv = float(v)
    except (TypeError, ValueError):
        raise ParamOutOfRange(f"parameter {key} must be an integer", param=key, value=str(v))
    if fv != int(fv) or fv < lo or (hi is not None and fv > hi):
        raise ParamOutOfRange(f"parameter {key} out of range", param=key, value=v,
                              low=lo, high=hi)
    return int(fv)


def _check(cond, msg, **details):
    if not cond:
        raise ParamOutOfRange(msg, **details)


# ---------------------------------------------------------------------------
# builders

def _planar(name, punctures, g, w, dlg, pun_info, base=1 + 0j, params=None, info=None,
            real_data=True):
    curve = planar_domain(punctures)
    pts = []
    for p in curve_punctures(curve):
        pts.append(replace(p, **pun_info[p.id]))
    sym = symmetry_group(curve) if real_data else ()
    return WeierstrassBundle(name, curve, g, w, dlg, tuple(pts), 0, sym,
                             tuple(homology_basis(curve)), dict(params or {}),
                             SurfacePoint(complex(base)), info=dict(info or {}))


def _catenoid(params):
    return _planar(
        "catenoid", (0, INF),
        lambda z, u: z, lambda z, u: 1.0 / z, lambda z, u: 1.0 / z,
        {"p0": dict(end_type="catenoid", limit_normal="down", g_limit="zero"),
         "infinity": dict(end_type="catenoid", limit_normal="up", g_limit="pole")},
        info={"base_X": (-1.0, 0.0, 0.0)})


def _helicoid(params):
    b = conjugate(_catenoid(params))
    return replace(b, name="helicoid", info={"base_X": (0.0, 0.0, 0.0)})


def _assoc_catenoid(params):
    th = _num(params, "theta", math.pi / 4)
    b = associate(_catenoid(params), th)
    base_X = (-math.cos(th), 0.0, 0.0)
    return replace(b, name="assoc_catenoid", info={"base_X": base_X})


def _enneper(params):
    return _planar("enneper", (INF,), lambda z, u: z, lambda z, u: z,
                   lambda z, u: 1.0 / z,
                   {"infinity": dict(end_type="non_embedded", limit_normal="up",
                                     g_limit="pole")}, base=0j)


def _k_enneper(params, name="k_enneper", a=1.0):
    k = _int(params, "k", 2, 1, 64)
    return _planar(name, (INF,), lambda z, u: z ** k, lambda z, u: a * z ** k,
                   lambda z, u: k / z,
                   {"infinity": dict(end_type="non_embedded", limit_normal="up",
                                     g_limit="pole")}, base=0j, params={"k": k, "a": a})


def _lr_limit_regular(params):
    a = _num(params, "a", 1.0)
    _check(a != 0.0, "a must be nonzero", param="a")
    _int(params, "k", 2, 1, 64)
    return _k_enneper(params, "lr_limit_regular", a)


def _lr_limit_flat(params):
    k = _int(params, "k", 2, 2, 64)
    a = _num(params, "a", 1.0)
    _check(a != 0.0, "a must be nonzero", param="a")
    return _planar("lr_limit_flat", (0, INF), lambda z, u: z ** k,
                   lambda z, u: a * z ** (k - 2), lambda z, u: k / z,
                   {"p0": dict(end_type="flat", limit_normal="down", g_limit="zero"),
                    "infinity": dict(end_type="non_embedded", limit_normal="up",
                                     g_limit="pole")},
                   params={"k": k, "a": a})


def _n_noid(params):
    n = _int(params, "n", 3, 2, 32)
    return _planar("n_noid", (0, INF), lambda z, u: z ** (n - 1),
                   lambda z, u: (z ** n + z ** (-n) + 2.0) / z,
                   lambda z, u: (n - 1) / z,
                   {"p0": dict(end_type="non_embedded", limit_normal="down",
                               g_limit="zero" if n > 1 else "finite"),
                    "infinity": dict(end_type="non_embedded", limit_normal="up",
                                     g_limit="pole")},
                   params={"n": n})


def _neg_lopezros(params):
    r = _num(params, "r", 1.0)
    _check(r > 0, "r must be positive", param="r")
    return _planar("neg_lopezros_attempt", (-1.0, 1.0, INF),
                   lambda z, u: r * (z - 1) / (z + 1), lambda z, u: np.ones_like(z),
                   lambda z, u: 1.0 / (z - 1) - 1.0 / (z + 1),
                   {"p0": dict(end_type="catenoid", limit_normal="up", g_limit="pole"),
                    "p1": dict(end_type="catenoid", limit_normal="down", g_limit="zero"),
                    "infinity": dict(end_type="flat", limit_normal="up", g_limit="finite")},
                   base=0j, params={"r": r})


def immersed_flat_end_r(rho: float) -> float:
    """r closing the one-dimensional period for a given rho.

    The only period is the vertical loop around z = 1, whose phi_2 residue
    vanishes exactly when (1 - r^2)(3 + r^2) = rho^2.
    """
    _check(0 < rho < math.sqrt(3.0), "rho must lie in (0, sqrt 3)", param="rho")
    return math.sqrt(-1.0 + math.sqrt(4.0 - rho * rho))


def _immersed_flat_end(params):
    rho = _num(params, "rho", 1.0)
    _check(rho > 0, "rho must be positive", param="rho")
    if "r" in params and params["r"] is not None:
        r = _num(params, "r", 0.5)
    else:
        r = immersed_flat_end_r(rho)
    _check(r > 0 and r != 1.0, "r must be positive and different from 1", param="r")
    return _planar("immersed_flat_end", (-1.0, 1.0, INF),
                   lambda z, u: rho / ((z - r) * (z + r)),
                   lambda z, u: (z * z - r * r) / (z * z - 1) ** 2,
                   lambda z, u: -1.0 / (z - r) - 1.0 / (z + r),
                   {"p0": dict(end_type="catenoid", limit_normal="up", g_limit="finite"),
                    "p1": dict(end_type="catenoid", limit_normal="up", g_limit="finite"),
                    "infinity": dict(end_type="flat", limit_normal="down",
                                     g_limit="zero")},
                   base=0j, params={"rho": rho, "r": r})


def _chen_gackstatter(params):
    rho = chen_gackstatter_rho()
    curve = chen_gackstatter_curve()
    pts = [replace(p, end_type="non_embedded", limit_normal="down", g_limit="zero")
           for p in curve_punctures(curve)]

    def g(z, u):
        with np.errstate(divide="ignore", invalid="ignore"):
            return rho * z / u

    return WeierstrassBundle(
        "chen_gackstatter", curve,
        g, lambda z, u: np.ones_like(z),
        lambda z, u: 1.0 / z - 0.5 * curve.dlogF(z),
        tuple(pts), 1, symmetry_group(curve), tuple(homology_basis(curve)),
        {"rho": rho}, SurfacePoint(0j, 0j))


def _neg_schoen(params):
    r = _num(params, "r", 2.5)
    _check(r > 1, "r must exceed 1", param="r")
    curve = double_cover((-r, -1.0, 1.0, r), punctures=(-1.0, 1.0))
    pts = []
    for p in curve_punctures(curve):
        gl = "zero" if p.z.real > 0 else "pole"
        pts.append(replace(p, end_type="catenoid",
                           limit_normal="down" if gl == "zero" else "up", g_limit=gl))
    z0 = 0j
    return WeierstrassBundle(
        "neg_schoen_attempt", curve,
        lambda z, u: u / ((1 + z) * (r + z)),
        lambda z, u: 1.0 / (z * z - 1),
        lambda z, u: 0.5 * curve.dlogF(z) - 1.0 / (1 + z) - 1.0 / (r + z),
        tuple(pts), 1, symmetry_group(curve), tuple(homology_basis(curve)),
        {"r": r}, SurfacePoint(z0, complex(uhp_sheet(curve, z0))))


def mkx_bundle(k: int, alpha: float, name="mkx") -> WeierstrassBundle:
    sol = solve_family(k, alpha)
    curve = mkx_curve(k, alpha)
    x, A, m, rho = curve.x, curve.A, sol.m, sol.rho

    def g(z, u):
        # 0/0 at the saddle (0, 0) is removable; callers never use that value
        with np.errstate(divide="ignore", invalid="ignore"):
            return rho * z / (u * (m * z + 1))

    def w(z, u):
        return -A * (m * z + 1) / ((z - x) * (z + 1 / x))

    def dlg(z, u):
        return 1.0 / z - curve.dlogF(z) / k - m / (m * z + 1)

    info = {
        "bottom": dict(end_type="catenoid", limit_normal="down", g_limit="zero"),
        "top": dict(end_type="catenoid", limit_normal="down", g_limit="zero"),
        "middle": dict(end_type="flat" if m == 0 else "catenoid", limit_normal="up",
                       g_limit="pole"),
    }
    pts = tuple(replace(p, **info[p.id]) for p in curve_punctures(curve))
    params = {"k": k, "alpha": alpha, "x": x, "m": m, "rho": rho}
    return WeierstrassBundle(name, curve, g, w, dlg, pts, k - 1, symmetry_group(curve),
                             tuple(homology_basis(curve)), params, SurfacePoint(0j, 0j),
                             info={"solution": sol})


def _mk(params):
    k = _int(params, "k", 2, 2, 64)
    return mkx_bundle(k, math.pi / 4, name="mk")


def mkx_alpha(params) -> float:
    """alpha from either alpha or x = cot(alpha) (0 < x <= 1)."""
    if params.get("alpha") is not None and params.get("x") is not None:
        raise ParamOutOfRange("give alpha or x, not both")
    if params.get("x") is not None:
        x = _num(params, "x", 1.0)
        _check(0 < x <= 1, "x must lie in (0, 1]", param="x")
        return math.atan2(1.0, x)
    a = _num(params, "alpha", 1.0)
    _check(math.pi / 4 - 1e-15 <= a < math.pi / 2, "alpha must lie in [pi/4, pi/2)",
           param="alpha")
    return a


def _mkx(params):
    k = _int(params, "k", 2, 2, 64)
    return mkx_bundle(k, mkx_alpha(params))


# ---------------------------------------------------------------------------
# the table

_PI4 = "[pi/4, pi/2)"

_ENTRIES = [
    (CatalogEntry("catenoid", {}, _expected(1, 0, 2, True, index=1),
                  "C - {0}, g = z, dh = dz/z"), _catenoid),
    (CatalogEntry("helicoid", {}, _expected(None, 0, 2, True, well_posed=False, ftc=False,
                                            notes="conjugate catenoid; vertical period 2 pi"),
                  "conjugate of the catenoid, g = z, dh = -i dz/z"), _helicoid),
    (CatalogEntry("assoc_catenoid", {"theta": (math.pi / 4, "real")},
                  _expected(None, 0, 2, False, well_posed=False, ftc=False,
                            notes="well posed and embedded only for theta = 0 mod pi"),
                  "g = z, dh = e^{i theta} dz/z"), _assoc_catenoid),
    (CatalogEntry("enneper", {}, _expected(1, 0, 1, False, index=1),
                  "C, g = z, dh = z dz"), _enneper),
    (CatalogEntry("k_enneper", {"k": (2, "integer >= 1")},
                  _expected(2, 0, 1, False, index=3,
                            notes="degree and index are k and 2k - 1"),
                  "C, g = z^k, dh = z^k dz"), _k_enneper),
    (CatalogEntry("chen_gackstatter", {}, _expected(2, 1, 1, False, index=3),
                  "square torus w^2 = z(z^2 - 1), g = rho z/w, dh = dz"), _chen_gackstatter),
    (CatalogEntry("n_noid", {"n": (3, "integer >= 2")},
                  _expected(2, 0, 2, False, index=3,
                            notes="degree n - 1 and index 2n - 3; the data as given have "
                                  "two ends of higher multiplicity"),
                  "sphere, g = z^(n-1), dh = (z^n + z^-n + 2) dz/z"), _n_noid),
    (CatalogEntry("mk", {"k": (2, "integer >= 2")},
                  _expected(3, 1, 3, True, index=5,
                            notes="degree k + 1, genus k - 1, index 2k + 1"),
                  "M_{k,1}: the x = 1 member of the three-ended family"), _mk),
    (CatalogEntry("mkx", {"k": (2, "integer >= 2"), "alpha": (1.0, _PI4),
                          "x": (None, "(0, 1], alternative to alpha")},
                  _expected(3, 1, 3, True, notes="degree k + 1, genus k - 1"),
                  "three-ended family M_{k,x} with k vertical symmetry planes"), _mkx),
    (CatalogEntry("lr_limit_regular", {"k": (2, "integer >= 1"), "a": (1.0, "nonzero")},
                  _expected(2, 0, 1, False, index=3, notes="degree k"),
                  "g = zeta^k, dh = a zeta^k dzeta"), _lr_limit_regular),
    (CatalogEntry("lr_limit_flat", {"k": (2, "integer >= 2"), "a": (1.0, "nonzero")},
                  _expected(2, 0, 2, False, notes="degree k; flat end at 0"),
                  "g = zeta^k, dh = a zeta^(k-2) dzeta"), _lr_limit_flat),
    (CatalogEntry("neg_lopezros_attempt", {"r": (1.0, "> 0")},
                  _expected(1, 0, 3, False, well_posed=False,
                            notes="period around z = 1 is nonzero for every r"),
                  "C - {+-1}, g = r(z - 1)/(z + 1), dh = dz"), _neg_lopezros),
    (CatalogEntry("neg_schoen_attempt", {"r": (2.5, "> 1")},
                  _expected(2, 1, 2, False, well_posed=False,
                            notes="torus g^2 = (1-z)(r-z)/((1+z)(r+z)); periods fail"),
                  "g^2 = (1-z)(r-z)/((1+z)(r+z)), dh = dz/(z^2 - 1)"), _neg_schoen),
    (CatalogEntry("immersed_flat_end", {"rho": (1.0, "(0, sqrt 3) when r is solved"),
                                        "r": (None, "> 0, != 1; solved from rho if absent")},
                  _expected(2, 0, 3, False,
                            notes="ends separately embedded but not parallel"),
                  "g = rho/((z-r)(z+r)), dh = (z^2-r^2)/(z^2-1)^2 dz"), _immersed_flat_end),
]

_BUILDERS = {e.name: f for e, f in _ENTRIES}


def list_catalog() -> list:
    return [e for e, _ in _ENTRIES]


def get_entry(name: str) -> CatalogEntry:
    for e, _ in _ENTRIES:
        if e.name == name:
            return e
    raise UnknownEntry(f"unknown surface {name!r}", name=name)


def expected_for(name: str, params: dict | None = None) -> dict:
    """Expected record with parameter dependent values filled in."""
    params = dict(params or {})
    rec = dict(get_entry(name).expected)
    if name in ("k_enneper", "lr_limit_regular"):
        k = int(params.get("k", 2))
        rec.update(degree=k, index=2 * k - 1, total_curvature=-FOUR_PI * k)
    elif name == "lr_limit_flat":
        k = int(params.get("k", 2))
        rec.update(degree=k, total_curvature=-FOUR_PI * k)
    elif name == "n_noid":
        n = int(params.get("n", 3))
        rec.update(degree=n - 1, index=2 * n - 3, total_curvature=-FOUR_PI * (n - 1))
    elif name in ("mk", "mkx"):
        k = int(params.get("k", 2))
        rec.update(degree=k + 1, genus=k - 1, total_curvature=-FOUR_PI * (k + 1))
        if name == "mk":
            rec["index"] = 2 * k + 1
    elif name == "assoc_catenoid":
        th = float(params.get("theta", math.pi / 4))
        if math.isclose(math.remainder(th, math.pi), 0.0, abs_tol=1e-15):
            rec.update(degree=1, total_curvature=-FOUR_PI, embedded=True, well_posed=True,
                       finite_total_curvature=True, index=1)
    return rec


def make_surface(name: str, params: dict | None = None) -> WeierstrassBundle:
    params = {k: v for k, v in dict(params or {}).items() if v is not None}
    if name not in _BUILDERS:
        raise UnknownEntry(f"unknown surface {name!r}", name=name)
    allowed = set(get_entry(name).params)
    extra = set(params) - allowed
    if extra:
        raise ParamOutOfRange(f"unknown parameters for {name}: {sorted(extra)}",
                              params=sorted(extra))
    b = _BUILDERS[name](params)
    info = dict(b.info)
    info["expected"] = expected_for(name, params)
    return replace(b, info=info)
