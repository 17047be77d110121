"""Stability index from the spectrum of the Gauss map pullback metric.

The index of a complete minimal surface of finite total curvature is the
number of eigenvalues below 2 of the Laplacian of the metric pulled back from
the round sphere by the extended Gauss map.  The Dirichlet energy is
conformally invariant, so the stiffness matrix is the cotangent Laplacian of
any conformal triangulation of the compactified domain; only the mass matrix
sees the map.

The domain sphere is triangulated as a subdivided octahedron whose vertices
include z = 0, +-1, +-i, infinity (stereographic coordinate z, north pole at
infinity).  The square torus of the genus-one Enneper-type surface is two
copies glued across the cuts [-1, 0] and [1, infinity].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.sparse import coo_matrix, diags
from scipy.sparse.linalg import eigsh
from scipy.spatial import cKDTree

from .errors import MeshError, NearThresholdAmbiguous, ParamOutOfRange, UnsupportedTopology
from .riemann_domain import CHEN_GACKSTATTER, PLANAR
from .tolerances import THRESHOLD_GUARD
from .weierstrass import WeierstrassBundle, normal_from_g

GREAT_CIRCLE_TOL = 1e-8
FIT_TOL = 1e-10


# ---------------------------------------------------------------------------
# rational maps and the Gauss map of a bundle

@dataclass(frozen=True)
class RationalMap:
    """g = P/Q with coefficient arrays in increasing powers of z."""
    num: tuple
    den: tuple = (1.0,)
    name: str = "rational"

    @classmethod
    def identity(cls) -> "RationalMap":
        return cls((0.0, 1.0), (1.0,), "identity")

    @property
    def P(self):
        return np.polynomial.Polynomial(np.asarray(self.num, dtype=complex))

    @property
    def Q(self):
        return np.polynomial.Polynomial(np.asarray(self.den, dtype=complex))

    @property
    def degree(self) -> int:
        return max(_deg(self.P), _deg(self.Q))

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.P(z) / self.Q(z)

    def dg_abs(self, z):
        """|g'(z)|, written so it stays finite at zeros of g."""
        P, Q = self.P, self.Q
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.abs(P.deriv()(z) * Q(z) - P(z) * Q.deriv()(z)) / np.abs(Q(z)) ** 2

    def critical_points(self) -> list:
        """(point, value) pairs of the ramification points, infinity included."""
        P, Q = self.P, self.Q
        W = P.deriv() * Q - P * Q.deriv()
        W = _trim(W)
        roots = list(W.roots()) if _deg(W) > 0 else []
        out = []
        for c in roots:
            q = complex(Q(c))
            out.append((complex(c), complex(P(c)) / q if abs(q) > 0 else complex(math.inf)))
        missing = 2 * self.degree - 2 - len(roots)
        if missing > 0:
            dp, dq = _deg(P), _deg(Q)
            if dp > dq:
                val = complex(math.inf)
            elif dp < dq:
                val = 0j
            else:
                val = complex(P.coef[dp] / Q.coef[dq])
            out += [(complex(math.inf), val)] * missing
        return out


def _trim(p, rel=1e-12):
    c = np.asarray(p.coef, dtype=complex)
    scale = max(float(np.max(np.abs(c))), 1e-300)
    n = len(c)
    while n > 1 and abs(c[n - 1]) <= rel * scale:
        n -= 1
    return np.polynomial.Polynomial(c[:n])


def _deg(p) -> int:
    return len(_trim(p).coef) - 1


def fit_rational(f: Callable, max_degree: int = 16, radius: float = 1.2345,
                 samples: int = 96) -> RationalMap:
    """Smallest-degree P/Q matching f on a circle, by a null vector of the
    linearised interpolation conditions P(z) - f(z) Q(z) = 0."""
    th = 2 * np.pi * (np.arange(samples) + 0.123) / samples
    z = radius * np.exp(1j * th)
    fz = np.asarray(f(z), dtype=complex)
    if not np.all(np.isfinite(fz)):
        raise ParamOutOfRange("map is singular on the fitting circle")
    scale = max(1.0, float(np.max(np.abs(fz))))
    for D in range(1, max_degree + 1):
        V = z[:, None] ** np.arange(D + 1)[None, :]
        A = np.hstack([V, -fz[:, None] * V / scale])
        _, s, vh = np.linalg.svd(A)
        v = vh[-1].conj()
        if s[-1] <= FIT_TOL * s[0]:
            num, den = v[:D + 1], v[D + 1:] / scale
            k = int(np.argmax(np.abs(den)))
            return RationalMap(tuple(_clean(num / den[k])), tuple(_clean(den / den[k])))
    raise UnsupportedTopology("Gauss map is not a rational function of low degree")


def _clean(c, tol=1e-12):
    c = np.asarray(c, dtype=complex)
    c = np.where(np.abs(c) < tol * np.max(np.abs(c)), 0, c)
    if np.all(np.abs(c.imag) <= tol * max(1.0, float(np.max(np.abs(c))))):
        return c.real.astype(complex)
    return c


@dataclass(frozen=True)
class GaussMapData:
    """What the eigenproblem needs from the extended Gauss map.

    ``dg_abs(z)`` is |dg/dz| and ``g_abs(z)`` is |g| in the z-chart; both are
    single valued on the sphere even when g lives on a double cover.
    """
    name: str
    degree: int
    genus: int
    g_abs: Callable
    dg_abs: Callable
    branch_values: tuple
    sheets: int = 1

    def density(self, z):
        """Pulled-back area per area of the round domain sphere at z."""
        z = np.asarray(z, dtype=complex)
        a = self.g_abs(z)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            r = self.dg_abs(z) * (1.0 + np.abs(z) ** 2) / (1.0 + a * a)
        return np.nan_to_num(r * r, nan=0.0, posinf=0.0)


def gauss_map(obj) -> GaussMapData:
    """Extended Gauss map of a bundle (or a bare rational map)."""
    if isinstance(obj, GaussMapData):
        return obj
    if isinstance(obj, RationalMap):
        return _from_rational(obj, obj.name)
    if not isinstance(obj, WeierstrassBundle):
        raise ParamOutOfRange("expected a bundle or a rational map")
    b = obj
    kind = b.domain.curve_kind
    if kind == PLANAR:
        R = fit_rational(lambda z: b.g(z, 0j))
        return _from_rational(R, b.name)
    if kind == CHEN_GACKSTATTER:
        return _torus_map(b)
    raise UnsupportedTopology("index estimates support genus 0 domains and the square torus",
                              surface=b.name, genus=b.genus)


def _from_rational(R: RationalMap, name: str) -> GaussMapData:
    if R.degree < 1:
        raise UnsupportedTopology("Gauss map is constant")
    vals = tuple(v for _, v in R.critical_points())
    return GaussMapData(name, R.degree, 0, lambda z: np.abs(R(z)), R.dg_abs, vals)


def _torus_map(b: WeierstrassBundle) -> GaussMapData:
    curve = b.domain

    def fibre(z):
        return np.sqrt(curve.F(z))

    def g_of(z):
        return b.g(z, fibre(z))

    # g^2 does not depend on the sheet
    z = np.array([0.3 + 0.7j, -1.7 + 0.2j, 2.1 - 1.3j])
    u = fibre(z)
    if not np.allclose(b.g(z, u) ** 2, b.g(z, -u) ** 2, rtol=1e-12):
        raise UnsupportedTopology("g^2 is not single valued on the chart")
    R = fit_rational(lambda z: g_of(z) ** 2)
    vals = []
    P, Q = R.P, R.Q
    W = _trim(P.deriv() * Q - P * Q.deriv())
    for c in (W.roots() if _deg(W) > 0 else []):
        if any(abs(c - q) < 1e-9 for q, _ in curve.factors):
            continue
        w = complex(R(c)) ** 0.5
        vals += [w, -w]
    for q in [q for q, _ in curve.factors] + [complex(math.inf)]:
        if math.isinf(abs(q)):
            dp, dq = _deg(P), _deg(Q)
            rv = None if dp != dq else complex(P.coef[dp] / Q.coef[dq])
        else:
            qq = complex(Q(q))
            rv = complex(P(q)) / qq if abs(qq) > 1e-12 and abs(complex(P(q))) > 1e-12 else None
        if rv is not None and rv != 0:
            vals.append(rv ** 0.5)

    def dg_abs(z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.abs(g_of(z) * b.dlogg(z, fibre(z)))

    return GaussMapData(b.name, R.degree, 1, lambda z: np.abs(g_of(z)), dg_abs,
                        tuple(vals), sheets=2)


def great_circle_branch_check(obj, tol: float = GREAT_CIRCLE_TOL) -> bool:
    """True when all branch values of the Gauss map lie on one great circle.

    ``obj`` may be a bundle, a rational map, or a sequence of branch values
    (complex numbers, infinity allowed)."""
    if isinstance(obj, (list, tuple, np.ndarray)):
        vals = [complex(v) for v in obj]
    else:
        vals = list(gauss_map(obj).branch_values)
    return _on_great_circle(vals, tol)


def _on_great_circle(vals, tol):
    if len(vals) == 0:
        return True
    P = normal_from_g(np.array(vals, dtype=complex))
    P = np.unique(np.round(P, 12), axis=0)
    if len(P) <= 2:
        return True
    _, _, vh = np.linalg.svd(P)
    return bool(np.max(np.abs(P @ vh[-1])) <= tol)


# ---------------------------------------------------------------------------
# triangulations of the domain

def octasphere(n: int):
    """Octahedron with every edge cut into n pieces, pushed onto the unit
    sphere.  Returns (vertices, triangles) with outward orientation."""
    if n < 1:
        raise ParamOutOfRange("subdivision must be positive", n=n)
    corners = np.array([[1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]],
                       float)
    faces = []
    for top in (4, 5):
        for i in range(4):
            a, c = i, (i + 1) % 4
            faces.append((top, a, c) if top == 5 else (top, c, a))
    pts, tris = [], []
    for f in faces:
        A, B, C = corners[list(f)]
        idx = {}
        for i in range(n + 1):
            for j in range(n + 1 - i):
                idx[i, j] = len(pts)
                pts.append((A * (n - i - j) + B * i + C * j) / n)
        for i in range(n):
            for j in range(n - i):
                tris.append((idx[i, j], idx[i + 1, j], idx[i, j + 1]))
                if i + j < n - 1:
                    tris.append((idx[i + 1, j], idx[i + 1, j + 1], idx[i, j + 1]))
    pts = np.array(pts)
    tris = np.array(tris)
    # merge the copies of shared edge points
    key = np.round(pts * 2 * n).astype(np.int64)
    _, first, inv = np.unique(key, axis=0, return_index=True, return_inverse=True)
    V = pts[first]
    T = inv.ravel()[tris]
    V = V / np.linalg.norm(V, axis=1)[:, None]
    # outward orientation
    c = V[T].mean(axis=1)
    nrm = np.cross(V[T[:, 1]] - V[T[:, 0]], V[T[:, 2]] - V[T[:, 0]])
    flip = np.einsum("ij,ij->i", nrm, c) < 0
    T[flip] = T[flip][:, [0, 2, 1]]
    return V, T


def stereo(P) -> np.ndarray:
    """Stereographic coordinate of unit vectors (north pole -> infinity)."""
    P = np.asarray(P, float)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = (P[..., 0] + 1j * P[..., 1]) / (1.0 - P[..., 2])
    return np.where(P[..., 2] >= 1.0, complex(math.inf), z)


def torus_lift(V, T):
    """Two copies of the sphere mesh glued across [-1, 0] and [1, inf]
    (in z); the four corners over z = 0, +-1, inf stay single."""
    nv = len(V)
    corner = (np.abs(V[:, 1]) < 1e-14) & (np.abs(np.abs(V[:, 0]) + np.abs(V[:, 2]) - 1) < 1e-14) \
        & ((np.abs(V[:, 0]) < 1e-14) | (np.abs(V[:, 2]) < 1e-14))
    on_axis = np.abs(V[:, 1]) < 1e-14
    cut = on_axis & (((V[:, 0] <= 0) & (V[:, 2] <= 0)) | ((V[:, 0] >= 0) & (V[:, 2] >= 0))) \
        & ~corner
    lower = V[T].mean(axis=1)[:, 1] < 0
    tris = []
    for s in (0, 1):
        sheet = np.where(cut[T] & lower[:, None], 1 - s, s)
        idx = np.where(corner[T], T, T + sheet * nv)
        tris.append(idx)
    T2 = np.concatenate(tris)
    used = np.unique(T2)
    remap = -np.ones(2 * nv, int)
    remap[used] = np.arange(len(used))
    V2 = np.concatenate([V, V])[used]
    return V2, remap[T2], used % nv


# ---------------------------------------------------------------------------
# matrices

def cotangent_stiffness(V, T):
    """Symmetric positive semidefinite cotangent Laplacian."""
    rows, cols, vals = [], [], []
    for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        u = V[T[:, b]] - V[T[:, a]]
        w = V[T[:, c]] - V[T[:, a]]
        cot = np.einsum("ij,ij->i", u, w) / np.linalg.norm(np.cross(u, w), axis=1)
        i, j = T[:, b], T[:, c]
        h = 0.5 * cot
        rows += [i, j, i, j]
        cols += [j, i, i, j]
        vals += [-h, -h, h, h]
    n = len(V)
    return coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n)).tocsr()


def _tri_rule(m: int = 5):
    """Collapsed Gauss-Legendre rule on the unit triangle (bary weights)."""
    x, w = np.polynomial.legendre.leggauss(m)
    x = 0.5 * (x + 1)
    w = 0.5 * w
    s, t = np.meshgrid(x, x, indexing="ij")
    ws = np.outer(w, w) * (1 - s)
    b1 = s
    b2 = (1 - s) * t
    return np.c_[(1 - b1 - b2).ravel(), b1.ravel(), b2.ravel()], ws.ravel()


def pullback_areas(gm: GaussMapData, V, T, order: int = 5) -> np.ndarray:
    """Per triangle area of the Gauss image: the pulled-back density
    integrated over the spherical triangle under radial projection."""
    bary, w = _tri_rule(order)
    A, B, C = V[T[:, 0]], V[T[:, 1]], V[T[:, 2]]
    nrm = np.cross(B - A, C - A)
    area2 = np.linalg.norm(nrm, axis=1)
    nhat = nrm / area2[:, None]
    h = np.abs(np.einsum("ij,ij->i", nhat, A))
    out = np.zeros(len(T))
    for (l0, l1, l2), wk in zip(bary, w):
        P = l0 * A + l1 * B + l2 * C
        r = np.linalg.norm(P, axis=1)
        dens = gm.density(stereo(P / r[:, None]))
        out += wk * dens * h / r ** 3
    return out * area2


# ---------------------------------------------------------------------------
# the index

@dataclass(frozen=True)
class LevelResult:
    subdivision: int
    vertices: int
    eigenvalues: tuple
    index: int
    area: float


@dataclass(frozen=True)
class SpectralReport:
    eigenvalues_below_threshold: tuple
    index: int
    margin: float
    refinement_levels: int
    stable: bool
    degree: int = 0
    genus: int = 0
    area: float = 0.0
    area_relerr: float = 0.0
    threshold_cluster: tuple = ()
    levels: tuple = ()
    great_circle: Optional[bool] = None
    expected_index: Optional[int] = None
    genus0_bound_ok: Optional[bool] = None
    guard: float = THRESHOLD_GUARD


def _mesh(gm: GaussMapData, n: int):
    V, T = octasphere(n)
    if gm.sheets == 2:
        V, T, _ = torus_lift(V, T)
    chi = len(V) - len(np.unique(np.sort(np.concatenate(
        [T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]]), axis=1), axis=0)) + len(T)
    if chi != 2 - 2 * gm.genus:
        raise MeshError("domain triangulation has the wrong Euler characteristic", chi=chi)
    return V, T


def _level(gm: GaussMapData, n: int, upper: float) -> LevelResult:
    V, T = _mesh(gm, n)
    K = cotangent_stiffness(V, T)
    ta = pullback_areas(gm, V, T)
    mass = np.zeros(len(V))
    np.add.at(mass, T.ravel(), np.repeat(ta / 3.0, 3))
    if np.any(mass <= 0):
        raise MeshError("zero row in the mass matrix")
    M = diags(mass).tocsc()
    nev = min(len(V) - 2, 2 * gm.degree + 8)
    while True:
        lam = eigsh(K.tocsc(), k=nev, M=M, sigma=-0.05, which="LM",
                    return_eigenvectors=False)
        lam = np.sort(lam.real)
        if lam[-1] > upper or nev >= len(V) - 2:
            break
        nev = min(len(V) - 2, 2 * nev)
    lam = np.where(np.abs(lam) < 1e-10, 0.0, lam)
    return LevelResult(n, len(V), tuple(float(x) for x in lam),
                       int(np.sum(lam < 2.0)), float(mass.sum()))


def index_estimate(obj, resolution: int = 64, refinements: int = 3,
                   guard: float = THRESHOLD_GUARD) -> SpectralReport:
    """Count eigenvalues below 2 of the pulled-back Laplacian.

    Levels use ``resolution``, ``resolution/2``, ... subdivisions (coarsest
    first).  Eigenvalue 2 always occurs, with the components of the normal
    as eigenfunctions; the eigenvalues within ``guard`` of 2 are accepted as
    that eigenspace when the cluster has at least three members, keeps its
    size between the last two levels and does not drift away from 2.
    Otherwise NearThresholdAmbiguous is raised.  The margin is the distance
    from 2 to the nearest eigenvalue outside the cluster.
    """
    if refinements < 2:
        raise ParamOutOfRange("at least two refinement levels are needed", refinements=refinements)
    subs = [resolution // 2 ** (refinements - 1 - i) for i in range(refinements)]
    if subs[0] < 2:
        raise ParamOutOfRange("resolution too small for the number of levels",
                              resolution=resolution)
    gm = gauss_map(obj)
    levels = [_level(gm, n, 2.0 + guard) for n in subs]
    fine, prev = levels[-1], levels[-2]
    lam = np.array(fine.eigenvalues)
    lp = np.array(prev.eigenvalues)
    near = np.abs(lam - 2.0) < guard
    cluster = lam[near]
    if near.any():
        # the same number of eigenvalues closest to 2 one level down
        m = int(near.sum())
        prev_c = lp[np.argsort(np.abs(lp - 2.0))[:m]]
        drift = np.abs(np.sort(cluster) - 2.0)
        drift_p = np.abs(np.sort(prev_c) - 2.0)
        ok = m >= 3 and len(prev_c) == m and np.all(drift <= drift_p * 1.05 + 1e-12)
        if not ok:
            raise NearThresholdAmbiguous(
                "eigenvalues near 2 do not behave like the Jacobi eigenspace",
                cluster=[float(x) for x in cluster], previous=[float(x) for x in prev_c])
    below = lam[(lam < 2.0) & ~near]
    counted = [int(np.sum((np.array(L.eigenvalues) < 2.0)
                          & (np.abs(np.array(L.eigenvalues) - 2.0) >= guard))) for L in levels]
    outside = lam[~near]
    margin = float(np.min(np.abs(outside - 2.0))) if len(outside) else math.inf
    area_exact = 4 * math.pi * gm.degree
    gc = _on_great_circle(list(gm.branch_values), GREAT_CIRCLE_TOL)
    index = counted[-1]
    levels = tuple(LevelResult(L.subdivision, L.vertices, L.eigenvalues, c, L.area)
                   for L, c in zip(levels, counted))
    return SpectralReport(
        tuple(float(x) for x in np.sort(below)), index, margin, len(levels),
        counted[-1] == counted[-2], gm.degree, gm.genus, fine.area,
        abs(fine.area - area_exact) / area_exact, tuple(float(x) for x in cluster), levels,
        gc, 2 * gm.degree - 1 if gc else None,
        (index <= 2 * gm.degree - 1) if gm.genus == 0 else None, guard)
