"""Triangle meshes of Weierstrass immersions and diagnostics on them.

The closed upper half plane of the chart is triangulated once.  Every
special real point (puncture, branch value, base point) gets a log-polar
patch: structured rings close to the point, Delaunay triangles in between.
X is integrated over a spanning tree of mesh edges and the half plane is
copied to the other sheets, either by the Euclidean action of a symmetry of
the data or by integrating the copy directly.  Copies are welded where both
the surface point and the position agree.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components
from scipy.spatial import Delaunay, cKDTree

from . import quadrature
from .errors import (InsufficientEndSamples, IoError, MeshError, NonzeroPeriod,
                     ParamOutOfRange, UnsupportedTopology)
from .periods import cycle_period
from .riemann_domain import PLANAR, SurfacePoint, _isinf, uhp_sheet
from .tolerances import END_TILT, PERIOD_TOL, TRUNC_EPS, TRUNC_R, WELD_TOL
from .weierstrass import WeierstrassBundle, gauss_curvature_array, normal_from_g

EDGE_NODES = 10
PARALLEL_TOL = 1e-10


# ---------------------------------------------------------------------------
# data types

@dataclass(eq=False)
class TriMesh:
    vertices: np.ndarray            # (V, 3)
    normals: np.ndarray             # (V, 3)
    gauss_k: np.ndarray             # (V,)
    triangles: np.ndarray           # (T, 3), oriented like the chart
    z: np.ndarray                   # chart value per vertex
    u: np.ndarray                   # fibre value per vertex
    owner: np.ndarray               # index into ``specials`` of the patch a vertex came from
    copy: np.ndarray                # sheet copy a vertex came from
    specials: tuple = ()
    truncation: dict = field(default_factory=dict)
    copies: int = 1
    symmetric_copies: int = 0       # copies placed by a symmetry instead of quadrature
    name: str = ""
    resolution: int = 0

    @property
    def provenance(self) -> list:
        return [SurfacePoint(complex(a), complex(b)) for a, b in zip(self.z, self.u)]

    @property
    def scale(self) -> float:
        lo, hi = self.vertices.min(axis=0), self.vertices.max(axis=0)
        return float(max(np.linalg.norm(hi - lo), 1e-300))

    def edges(self):
        """Undirected unique edges (E, 2)."""
        return _unique_edges(self.triangles)

    def boundary_edges(self):
        """Directed edges used by exactly one triangle."""
        t = self.triangles
        d = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        key = np.sort(d, axis=1)
        _, inv, cnt = np.unique(key, axis=0, return_inverse=True, return_counts=True)
        return d[cnt[inv.ravel()] == 1]

    def euler_characteristic(self) -> int:
        return int(len(self.vertices) - len(self.edges()) + len(self.triangles))

    def triangle_areas(self):
        p = self.vertices[self.triangles]
        return 0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)


@dataclass(frozen=True)
class Special:
    z: complex
    e: int                  # sheets of the chart meeting over z
    kind: str               # puncture | center
    pid: str | None = None
    cutoff: float | None = None


@dataclass(frozen=True)
class EndFit:
    alpha: float
    beta: float
    gamma1: float
    gamma2: float
    rms_residual: float
    samples: int = 0
    rho_min: float = 0.0
    rho_max: float = 0.0


@dataclass(frozen=True)
class TotalCurvature:
    value: float                # -(signed area of the discrete Gauss image incl. end caps)
    error_estimate: float
    quadrature: float           # sum of area * mean K over triangles, plus end caps
    caps: float                 # curvature attributed to the removed end discs
    degree: float               # value / (-4 pi)


@dataclass(frozen=True)
class IntersectionReport:
    count: int
    pairs_tested: int
    samples: tuple              # a few intersection locations
    truncation: dict
    note: str = "heuristic evidence at the stated truncation, not a proof"


# ---------------------------------------------------------------------------
# the half plane triangulation

def _unique_edges(tri):
    e = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    return np.unique(np.sort(e, axis=1), axis=0)


def _chordal(z, q):
    """Chordal distance on the Riemann sphere, vectorised in z."""
    z = np.asarray(z, dtype=complex)
    if _isinf(q):
        return 1.0 / np.sqrt(1.0 + np.abs(z) ** 2)
    return np.abs(z - q) / (np.sqrt(1.0 + np.abs(z) ** 2) * math.sqrt(1.0 + abs(q) ** 2))


def _ring(q, r, n):
    th = np.pi * np.arange(n + 1) / n
    pts = complex(q) + r * np.exp(1j * th)
    pts[0] = complex(q.real + r, 0.0)
    pts[-1] = complex(q.real - r, 0.0)
    return pts


def _specials(b: WeierstrassBundle, truncation: dict, with_base: bool) -> list:
    curve = b.domain
    out = []
    seen = []
    for p in b.punctures:
        if not _isinf(p.z) and complex(p.z).imag != 0.0:
            raise UnsupportedTopology("meshing needs punctures on the real axis", puncture=p.id)
        e = max(1, curve.ramification(p.z))
        cut = truncation.get(p.id)
        if cut is None:
            cut = TRUNC_R ** e if _isinf(p.z) else TRUNC_EPS ** e
        out.append(Special(p.z, e, "puncture", p.id, float(cut)))
        seen.append(p.z)
    for q in curve.z_branch_values():
        if complex(q).imag != 0.0:
            raise UnsupportedTopology("meshing needs branch values on the real axis")
        if not any((not _isinf(s)) and abs(s - q) == 0 for s in seen):
            out.append(Special(complex(q.real, 0.0), curve.ramification(q), "center"))
            seen.append(complex(q))
    if not any(_isinf(s) for s in seen):
        e = max(1, curve.ramification(complex(math.inf, 0)))
        out.append(Special(complex(math.inf, 0), e, "puncture", None,
                           float(truncation.get("outer", TRUNC_R ** e))))
    bz = complex(b.base.z)
    if with_base and not any((not _isinf(s)) and abs(s - bz) == 0 for s in seen):
        out.append(Special(bz, max(1, curve.ramification(bz)), "center"))
    return out


@dataclass
class HalfPlaneMesh:
    z: np.ndarray
    triangles: np.ndarray
    owner: np.ndarray
    is_real: np.ndarray
    is_center: np.ndarray
    center_e: np.ndarray            # ramification at center vertices, 1 elsewhere
    specials: list


def half_plane_mesh(specials: list, resolution: int) -> HalfPlaneMesh:
    """Triangulation of the closed upper half plane minus the end discs."""
    fin = [i for i, s in enumerate(specials) if not _isinf(s.z)]
    inf = [i for i, s in enumerate(specials) if _isinf(s.z)]
    if len(inf) != 1:
        raise MeshError("exactly one special point at infinity expected")
    qs = {i: complex(specials[i].z) for i in fin}
    maxq = max([abs(q) for q in qs.values()] + [1.0])
    d = {}
    for i in fin:
        others = [abs(qs[i] - qs[j]) for j in fin if j != i]
        d[i] = min(others) if others else 2.0 * max(1.0, abs(qs[i]))
    d_inf = 2.0 * maxq

    nth = {i: max(2, int(round(resolution / (2.0 * s.e)))) for i, s in enumerate(specials)}
    hh = {i: math.pi / nth[i] for i in nth}

    core_r = {}
    for i in fin:
        jc = math.ceil(math.log(2.0) / hh[i])
        core_r[i] = 0.5 * d[i] * math.exp(-jc * hh[i])
    ii = inf[0]
    jc = math.ceil(math.log(4.0) / hh[ii])
    core_R = 0.5 * d_inf * math.exp(jc * hh[ii])

    # ---- outer point cloud, owned by the chordally nearest special point
    centers = [specials[i].z for i in range(len(specials))]
    pts, own, ringflag = [], [], []
    for i in fin:
        n, h = nth[i], hh[i]
        r = core_r[i]
        pts.append(_ring(qs[i], r, n)); own.append(np.full(n + 1, i)); ringflag.append(np.full(n + 1, i))
        j = 1
        while True:
            rr = r * math.exp(j * h)
            if rr > 4.0 * core_R:
                break
            ring = _ring(qs[i], rr, n)
            pts.append(ring); own.append(np.full(n + 1, i)); ringflag.append(np.full(n + 1, -1))
            j += 1
    n, h = nth[ii], hh[ii]
    pts.append(_ring(0j, core_R, n)); own.append(np.full(n + 1, ii)); ringflag.append(np.full(n + 1, ii))
    rmin = 0.25 * min([core_r[i] for i in fin] + [1.0])
    j = 1
    while core_R * math.exp(-j * h) > rmin:
        pts.append(_ring(0j, core_R * math.exp(-j * h), n))
        own.append(np.full(n + 1, ii)); ringflag.append(np.full(n + 1, -1))
        j += 1
    P = np.concatenate(pts)
    O = np.concatenate(own)
    RF = np.concatenate(ringflag)

    dist = np.stack([_chordal(P, c) for c in centers])         # (S, N)
    best = dist.min(axis=0)
    mine = dist[O, np.arange(len(P))]
    keep = (mine <= best * (1 + 1e-9)) | (RF >= 0)
    # never inside another core
    for i in fin:
        inside = np.abs(P - qs[i]) < core_r[i] * math.exp(0.5 * hh[i])
        keep &= ~(inside & (O != i))
        keep &= ~((O == i) & (RF < 0) & (np.abs(P - qs[i]) <= core_r[i]))
    keep &= ~((O != ii) & (np.abs(P) > core_R * math.exp(-0.5 * hh[ii])))
    keep &= ~((O == ii) & (RF < 0) & (np.abs(P) >= core_R))
    P, O, RF = P[keep], O[keep], RF[keep]

    # drop near duplicates coming from two patches (core rings always win)
    spacing = np.empty(len(P))
    for i in range(len(specials)):
        m = O == i
        base_d = np.abs(P[m]) if _isinf(specials[i].z) else np.abs(P[m] - specials[i].z)
        spacing[m] = base_d * hh[i]
    order = np.lexsort((np.arange(len(P)), RF < 0))
    tree = cKDTree(np.c_[P.real, P.imag])
    alive = np.ones(len(P), bool)
    for a in order:
        if not alive[a]:
            continue
        for nb in tree.query_ball_point([P[a].real, P[a].imag], 0.3 * spacing[a]):
            if nb != a and alive[nb] and O[nb] != O[a] and RF[nb] < 0:
                alive[nb] = False
    P, O, RF = P[alive], O[alive], RF[alive]

    dl = Delaunay(np.c_[P.real, P.imag])
    tri = dl.simplices.copy()
    same_ring = (RF[tri[:, 0]] >= 0) & (RF[tri[:, 0]] == RF[tri[:, 1]]) & \
        (RF[tri[:, 1]] == RF[tri[:, 2]])
    tri = tri[~same_ring]

    # ---- structured cores
    Z = [P]
    OWN = [O]
    CEN = [np.zeros(len(P), bool)]
    CE = [np.ones(len(P), int)]
    tris = [tri]
    count = len(P)

    def ring_index(i):
        idx = np.nonzero(RF == i)[0]
        # order by angle on the ring (0..pi)
        ang = np.angle(P[idx] - (0j if _isinf(specials[i].z) else specials[i].z))
        ang = np.where(ang < 0, ang + 2 * np.pi, ang)
        ang[np.isclose(ang, 2 * np.pi)] = 0.0
        return idx[np.argsort(ang)]

    def add_quads(prev, cur):
        a, bb = prev[:-1], prev[1:]
        c, dd = cur[1:], cur[:-1]
        return np.concatenate([np.c_[a, bb, c], np.c_[a, c, dd]])

    for i, s in enumerate(specials):
        n, h = nth[i], hh[i]
        prev = ring_index(i)
        if len(prev) != n + 1:
            raise MeshError("core ring lost points", special=i)
        if s.kind == "center":
            e = s.e
            rc = core_r[i]
            sc = rc ** (1.0 / e)
            m = max(2, math.ceil(e * n / math.pi))
            for step in range(m - 1, 0, -1):
                rr = (sc * step / m) ** e
                ring = _ring(qs[i], rr, n)
                cur = np.arange(count, count + n + 1)
                Z.append(ring); OWN.append(np.full(n + 1, i))
                CEN.append(np.zeros(n + 1, bool)); CE.append(np.ones(n + 1, int))
                count += n + 1
                tris.append(add_quads(prev, cur))
                prev = cur
            c = count
            Z.append(np.array([complex(qs[i].real, 0.0)])); OWN.append(np.array([i]))
            CEN.append(np.array([True])); CE.append(np.array([e]))
            count += 1
            tris.append(np.c_[np.full(n, c), prev[:-1], prev[1:]])
        else:
            cut = float(s.cutoff)
            if _isinf(s.z):
                if cut <= core_R:
                    raise ParamOutOfRange("outer truncation radius too small", R=cut)
                J = max(1, math.ceil(math.log(cut / core_R) / h))
                radii = [core_R * math.exp(j * h) for j in range(1, J)] + [cut]
                centre = 0j
            else:
                if cut >= core_r[i]:
                    raise ParamOutOfRange("truncation radius too large", eps=cut)
                J = max(1, math.ceil(math.log(core_r[i] / cut) / h))
                radii = [core_r[i] * math.exp(-j * h) for j in range(1, J)] + [cut]
                centre = qs[i]
            if len(radii) > 1 and abs(math.log(radii[-2] / radii[-1])) < 0.5 * h:
                radii.pop(-2)
            for rr in radii:
                ring = _ring(centre, rr, n)
                cur = np.arange(count, count + n + 1)
                Z.append(ring); OWN.append(np.full(n + 1, i))
                CEN.append(np.zeros(n + 1, bool)); CE.append(np.ones(n + 1, int))
                count += n + 1
                tris.append(add_quads(prev, cur))
                prev = cur

    z = np.concatenate(Z)
    tri = np.concatenate(tris)
    # orient counter-clockwise in the chart; drop degenerate triangles
    p = z[tri]
    area = ((p[:, 1] - p[:, 0]).conj() * (p[:, 2] - p[:, 0])).imag
    scale = np.abs(p[:, 1] - p[:, 0]) * np.abs(p[:, 2] - p[:, 0])
    tri = tri[np.abs(area) > 1e-12 * scale]
    area = area[np.abs(area) > 1e-12 * scale]
    flip = area < 0
    tri[flip] = tri[flip][:, [0, 2, 1]]
    _check_manifold(tri, len(z))
    return HalfPlaneMesh(z, tri, np.concatenate(OWN), z.imag == 0.0,
                         np.concatenate(CEN), np.concatenate(CE), specials)


def _check_manifold(tri, nv):
    d = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    _, cnt = np.unique(d, axis=0, return_counts=True)
    if np.any(cnt > 1):
        raise MeshError("inconsistently oriented or repeated edges in the triangulation")
    _, cnt = np.unique(np.sort(d, axis=1), axis=0, return_counts=True)
    if np.any(cnt > 2):
        raise MeshError("non-manifold edge in the triangulation")
    used = np.zeros(nv, bool)
    used[tri.ravel()] = True
    if not used.all():
        raise MeshError("triangulation leaves isolated vertices", count=int((~used).sum()))


# ---------------------------------------------------------------------------
# sheet copies and their Euclidean action

@dataclass(frozen=True)
class SheetCopy:
    conj: bool
    j: int


def _eps(curve):
    return cmath.exp(-2j * math.pi / curve.n)


def sheet_u(curve, z, copy: SheetCopy):
    z = np.asarray(z, dtype=complex)
    if curve.curve_kind == PLANAR:
        return np.zeros(z.shape, dtype=complex)
    f = _eps(curve) ** copy.j
    if copy.conj:
        return np.conj(f * uhp_sheet(curve, np.conj(z)))
    return f * uhp_sheet(curve, z)


def _sample_points(b):
    z = np.array([0.31 + 0.77j, -1.3 + 0.4j, 2.2 + 1.9j, -0.05 + 3.1j])
    return z, uhp_sheet(b.domain, z)


def copy_action(b: WeierstrassBundle, copy: SheetCopy, tol=1e-9):
    """Orthogonal map M with X(copy p) = X(base) + M (X(p) - X(base)), or None
    when the copy is not related to the upper half sheet by a symmetry of the
    data fixing the base point."""
    curve = b.domain
    z, u = _sample_points(b)
    g0, w0 = b.g(z, u), b.omega(z, u)
    M = np.eye(3)
    if copy.j % max(curve.n, 1):
        if curve.curve_kind == PLANAR or abs(complex(b.base.u)) != 0.0:
            return None
        f = _eps(curve) ** copy.j
        g1, w1 = b.g(z, f * u), b.omega(z, f * u)
        c = g1 / g0
        if not (np.allclose(c, c[0], atol=tol) and abs(abs(c[0]) - 1) < tol
                and np.allclose(w1, w0, atol=tol * np.max(np.abs(w0)))):
            return None
        c = complex(c[0])
        M = np.array([[c.real, -c.imag, 0.0], [c.imag, c.real, 0.0], [0.0, 0.0, 1.0]])
    if copy.conj:
        zc, uc = np.conj(z), np.conj(u)
        if complex(b.base.z).imag != 0.0 or complex(b.base.u).imag != 0.0:
            return None
        if not (np.allclose(b.g(zc, uc), np.conj(g0), atol=tol * np.max(np.abs(g0)))
                and np.allclose(b.omega(zc, uc), np.conj(w0), atol=tol * np.max(np.abs(w0)))):
            return None
        M = np.diag([1.0, -1.0, 1.0]) @ M
    return M


def _edge_integrals(b, zc, uc_fun, src, dst, cen_e):
    """Re of the integral of Phi along the straight chart segments src -> dst.

    A branch point at the start (or end) is reached with z - q ~ t**e so the
    integrand stays smooth.
    """
    x, w = quadrature.gauss_legendre(EDGE_NODES)
    za, zb = zc[src][:, None], zc[dst][:, None]
    ea = cen_e[src][:, None].astype(float)
    eb = cen_e[dst][:, None].astype(float)
    t = x[None, :]
    lin = (ea == 1) & (eb == 1)
    from_a = ea > 1
    z = np.where(lin, za + (zb - za) * t, 0j)
    dz = np.where(lin, (zb - za) * np.ones_like(t), 0j)
    z = np.where(from_a, za + (zb - za) * t ** ea, z)
    dz = np.where(from_a, ea * (zb - za) * t ** (ea - 1), dz)
    to_b = (~lin) & (~from_a)
    s = 1.0 - t
    z = np.where(to_b, zb + (za - zb) * s ** eb, z)
    dz = np.where(to_b, eb * (zb - za) * s ** (eb - 1), dz)
    u = uc_fun(z)
    ph = b.phi(z, u) * dz[None]
    out = (ph * w[None, None, :]).sum(axis=-1).real.T
    if not np.all(np.isfinite(out)):
        raise MeshError("non-finite Weierstrass data on a mesh edge")
    return out


def _vertex_fields(b, zc, uc_fun, interior_dir):
    """Normals and curvature at vertices; removable 0/0 values are replaced
    by the value at a point pushed slightly into the half plane."""
    u = uc_fun(zc)
    with np.errstate(all="ignore"):
        g = b.g(zc, u)
        K = gauss_curvature_array(b, zc, u)
    bad = ~np.isfinite(g) & ~np.isinf(g) | ~np.isfinite(K) | (g == 0) & ~np.isfinite(K)
    bad |= np.isnan(g)
    if np.any(bad):
        for step in (1e-7, 1e-5):
            zz = zc[bad] + interior_dir * step * np.maximum(1.0, np.abs(zc[bad]))
            uu = uc_fun(zz)
            with np.errstate(all="ignore"):
                g[bad] = b.g(zz, uu)
                K[bad] = gauss_curvature_array(b, zz, uu)
            bad2 = np.isnan(g) | ~np.isfinite(K)
            if not bad2.any():
                break
    return normal_from_g(g), np.real(K), u


def check_period_free(b: WeierstrassBundle, tol=PERIOD_TOL):
    worst, label = 0.0, None
    for c in b.basis:
        p = float(np.max(np.abs(cycle_period(b, c))))
        if p > worst:
            worst, label = p, c.label
    if worst >= tol:
        raise NonzeroPeriod("bundle has a nonzero period; mesh refused",
                            surface=b.name, cycle=label, period=worst)
    return worst


def tessellate(b: WeierstrassBundle, resolution: int = 64, truncation: dict | None = None,
               allow_multivalued: bool = False, weld_tol: float = WELD_TOL,
               check_periods: bool = True, end_tilt: float | None = END_TILT) -> TriMesh:
    """Mesh of the immersion over all sheets, truncated at the ends.

    ``truncation`` maps puncture ids to a chart radius (finite punctures) or
    an outer radius (the puncture at infinity, key "outer" when it is not a
    puncture).  Defaults put every end at local-coordinate depth 2^-6, pushed
    deeper for ends whose normal is still tilted by more than ``end_tilt``
    radians on the cutoff ring; wide necks otherwise leave too little of the
    asymptotic regime for end fits.  Ends given explicitly are left alone.
    With ``allow_multivalued`` the period check is skipped and the sheets
    stay cut where X does not close up.
    """
    if resolution < 8:
        raise ParamOutOfRange("resolution must be at least 8", resolution=resolution)
    fixed = dict(truncation or {})
    if check_periods and not allow_multivalued:
        check_period_free(b)
    trunc = dict(fixed)
    mesh = _tessellate_once(b, resolution, trunc, weld_tol)
    for _ in range(3 if end_tilt else 0):
        deeper = {}
        for i, s in enumerate(mesh.specials):
            key = s.pid or "outer"
            if s.kind != "puncture" or key in fixed:
                continue
            tilt = _cutoff_tilt(mesh, i)
            if tilt > end_tilt:
                # the tilt is at least linear in the local coordinate
                f = (end_tilt / tilt) ** s.e
                deeper[key] = s.cutoff / f if _isinf(s.z) else s.cutoff * f
        if not deeper:
            break
        trunc.update(deeper)
        mesh = _tessellate_once(b, resolution, trunc, weld_tol)
    return mesh


def _cutoff_tilt(mesh: TriMesh, i: int) -> float:
    """Median normal tilt over the boundary vertices owned by special i."""
    bv = np.unique(mesh.boundary_edges())
    bv = bv[mesh.owner[bv] == i]
    if len(bv) == 0:
        return 0.0
    nz = np.clip(np.abs(mesh.normals[bv, 2]), 0.0, 1.0)
    return float(np.median(np.arccos(nz)))


def _tessellate_once(b, resolution, truncation, weld_tol):
    curve = b.domain
    hp = None
    for with_base in (False, True):
        sp = _specials(b, truncation, with_base)
        hp = half_plane_mesh(sp, resolution)
        hits = np.nonzero(hp.z == complex(b.base.z))[0]
        if len(hits):
            ibase = int(hits[0])
            break
    else:
        raise MeshError("base point is not a mesh vertex")

    edges = _unique_edges(hp.triangles)
    nv = len(hp.z)
    A = coo_matrix((np.ones(2 * len(edges)), (np.r_[edges[:, 0], edges[:, 1]],
                                              np.r_[edges[:, 1], edges[:, 0]])),
                   shape=(nv, nv)).tocsr()
    order, pred = breadth_first_order(A, ibase, directed=False, return_predecessors=True)
    if len(order) != nv:
        raise MeshError("half plane mesh is not connected")
    child = order[1:]
    parent = pred[child]
    base_X = np.asarray(b.info.get("base_X", (0.0, 0.0, 0.0)), float)

    nsheets = curve.n if curve.curve_kind != PLANAR else 1
    copies = [SheetCopy(False, j) for j in range(nsheets)] + \
        [SheetCopy(True, j) for j in range(nsheets)]

    def integrate(copy):
        zc = np.conj(hp.z) if copy.conj else hp.z.copy()
        fun = (lambda zz, copy=copy: sheet_u(curve, zz, copy))
        inc = _edge_integrals(b, zc, fun, parent, child, hp.center_e)
        X = np.empty((nv, 3))
        X[ibase] = base_X
        for c, p, d in zip(child, parent, inc):
            X[c] = X[p] + d
        return X

    X0 = integrate(copies[0])
    allV, allN, allK, allZ, allU, allT, allO, allC = [], [], [], [], [], [], [], []
    n_sym = 0
    for ci, cp in enumerate(copies):
        M = None if ci == 0 else copy_action(b, cp)
        if ci == 0:
            X = X0
        elif M is not None:
            X = base_X + (X0 - base_X) @ M.T
            n_sym += 1
        else:
            X = integrate(cp)
        zc = np.conj(hp.z) if cp.conj else hp.z.copy()
        N, K, u = _vertex_fields(b, zc, lambda zz, cp=cp: sheet_u(curve, zz, cp),
                                 -1j if cp.conj else 1j)
        tri = hp.triangles[:, [0, 2, 1]] if cp.conj else hp.triangles
        off = ci * nv
        allV.append(X); allN.append(N); allK.append(K); allZ.append(zc); allU.append(u)
        allT.append(tri + off); allO.append(hp.owner); allC.append(np.full(nv, ci))
    V = np.concatenate(allV)
    mesh = TriMesh(V, np.concatenate(allN), np.concatenate(allK), np.concatenate(allT),
                   np.concatenate(allZ), np.concatenate(allU), np.concatenate(allO),
                   np.concatenate(allC), tuple(hp.specials),
                   {s.pid or "outer": s.cutoff for s in hp.specials if s.kind == "puncture"},
                   len(copies), n_sym, b.name, int(resolution))
    cand = np.nonzero(np.tile(hp.is_real | hp.is_center, len(copies)))[0]
    return _weld(mesh, cand, weld_tol)


def _weld(mesh: TriMesh, cand, weld_tol):
    tol = weld_tol * mesh.scale
    tree = cKDTree(mesh.vertices[cand])
    pairs = tree.query_pairs(tol, output_type="ndarray")
    nv = len(mesh.vertices)
    parent = np.arange(nv)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, c in pairs:
        ia, ic = cand[a], cand[c]
        za, zc = mesh.z[ia], mesh.z[ic]
        if abs(za - zc) > 1e-12 * max(1.0, abs(za)):
            continue
        ua, uc = mesh.u[ia], mesh.u[ic]
        if abs(ua - uc) > 1e-7 * max(1.0, abs(ua)):
            continue
        ra, rc = find(ia), find(ic)
        if ra != rc:
            parent[max(ra, rc)] = min(ra, rc)
    root = np.array([find(a) for a in range(nv)])
    keep = root == np.arange(nv)
    new_index = np.cumsum(keep) - 1
    tri = new_index[root[mesh.triangles]]
    good = (tri[:, 0] != tri[:, 1]) & (tri[:, 1] != tri[:, 2]) & (tri[:, 0] != tri[:, 2])
    tri = tri[good]
    return TriMesh(mesh.vertices[keep], mesh.normals[keep], mesh.gauss_k[keep], tri,
                   mesh.z[keep], mesh.u[keep], mesh.owner[keep], mesh.copy[keep],
                   mesh.specials, mesh.truncation, mesh.copies, mesh.symmetric_copies,
                   mesh.name, mesh.resolution)


# ---------------------------------------------------------------------------
# total curvature

def _solid_angles(a, b, c):
    """Signed area of the spherical triangles with unit vertices a, b, c."""
    num = np.einsum("ij,ij->i", a, np.cross(b, c))
    den = 1.0 + np.einsum("ij,ij->i", a, b) + np.einsum("ij,ij->i", b, c) + \
        np.einsum("ij,ij->i", c, a)
    return 2.0 * np.arctan2(num, den)


def _end_caps(mesh: TriMesh):
    """Signed area of the Gauss image of each removed end disc, closing the
    boundary loop of the end with a fan from its mean normal."""
    be = mesh.boundary_edges()
    total = 0.0
    per_end = {}
    for i, s in enumerate(mesh.specials):
        if s.kind != "puncture":
            continue
        m = (mesh.owner[be[:, 0]] == i) & (mesh.owner[be[:, 1]] == i)
        if not m.any():
            continue
        e = be[m]
        apex = mesh.normals[e.ravel()].mean(axis=0)
        if np.linalg.norm(apex) < 1e-6:
            apex = mesh.normals[e[0, 0]]
        apex = apex / np.linalg.norm(apex)
        # boundary edge a -> b of a triangle: the cap uses b -> a
        area = _solid_angles(mesh.normals[e[:, 1]], mesh.normals[e[:, 0]],
                             np.broadcast_to(apex, (len(e), 3)))
        per_end[s.pid or "outer"] = float(area.sum())
        total += float(area.sum())
    return total, per_end


def total_curvature(obj, resolution: int = 128, truncation=None) -> TotalCurvature:
    """Integral of K dA over the surface.

    Each triangle contributes minus the spherical area spanned by its
    vertex normals (Gauss' theorem on the triangle); the removed end discs
    are closed by fans over their boundary loops.  The quadrature field is
    the plain sum of area times mean vertex curvature, reported as a
    cross-check and to form the error estimate.  A bundle is meshed first.
    """
    if isinstance(obj, WeierstrassBundle):
        fine = tessellate(obj, resolution, truncation)
        t1 = total_curvature(fine)
        coarse = tessellate(obj, max(8, resolution // 2), truncation)
        t2 = total_curvature(coarse)
        # second order in the mesh size for the quadrature field
        q = t1.quadrature + (t1.quadrature - t2.quadrature) / 3.0
        err = max(abs(t1.value - q), abs(t1.value - t2.value))
        return TotalCurvature(t1.value, err, q, t1.caps, t1.degree)
    mesh = obj
    t = mesh.triangles
    n = mesh.normals
    S = float(_solid_angles(n[t[:, 0]], n[t[:, 1]], n[t[:, 2]]).sum())
    caps, _ = _end_caps(mesh)
    sign = -1.0 if S + caps >= 0 else 1.0
    value = sign * (S + caps)
    quad = float(np.sum(mesh.triangle_areas() * mesh.gauss_k[t].mean(axis=1))) + sign * caps
    return TotalCurvature(value, abs(value - quad), quad, sign * caps, value / (-4 * math.pi))


# ---------------------------------------------------------------------------
# ends

def _special_for(mesh: TriMesh, puncture) -> int:
    pid = puncture if isinstance(puncture, str) else puncture.id
    for i, s in enumerate(mesh.specials):
        if s.kind == "puncture" and s.pid == pid:
            return i
    raise InsufficientEndSamples("no mesh vertices belong to this end", puncture=pid)


def end_fit(mesh: TriMesh, puncture, fraction: float = 0.2, min_samples: int = 12,
            axis=(0.0, 0.0)) -> EndFit:
    """Least squares fit of x3 = a log rho + b + (c1 x1 + c2 x2)/rho^2 over the
    outermost ``fraction`` of the vertices of an end.

    A free 1/rho^2 column absorbs the leading radial remainder; ends with a
    wide neck otherwise bias the log coefficient by a percent or more at the
    default truncation."""
    i = _special_for(mesh, puncture)
    idx = np.nonzero(mesh.owner == i)[0]
    X = mesh.vertices[idx] - np.array([axis[0], axis[1], 0.0])
    nz = np.abs(mesh.normals[idx, 2])
    rho = np.hypot(X[:, 0], X[:, 1])
    take = max(min_samples, int(math.ceil(fraction * len(idx))))
    if len(idx) < min_samples:
        raise InsufficientEndSamples("too few vertices on the end", count=len(idx))
    sel = np.argsort(rho)[::-1][:take]
    if np.median(nz[sel]) < 0.9:
        raise InsufficientEndSamples("end normal is not vertical; no vertical growth fit")
    x1, x2, x3, r = X[sel, 0], X[sel, 1], X[sel, 2], rho[sel]
    if r.min() <= 0:
        raise InsufficientEndSamples("end samples reach the axis")
    D = np.c_[np.log(r), np.ones_like(r), x1 / r ** 2, x2 / r ** 2, 1.0 / r ** 2]
    coef, *_ = np.linalg.lstsq(D, x3, rcond=None)
    res = x3 - D @ coef
    return EndFit(float(coef[0]), float(coef[1]), float(coef[2]), float(coef[3]),
                  float(np.sqrt(np.mean(res ** 2))), int(len(sel)), float(r.min()),
                  float(r.max()))


# ---------------------------------------------------------------------------
# self intersections

def _seg_tri(P0, P1, A, B, C, eps):
    """Segments P0-P1 crossing triangles ABC strictly inside (vectorised
    Moller-Trumbore)."""
    d = P1 - P0
    e1, e2 = B - A, C - A
    p = np.cross(d, e2)
    det = np.einsum("ij,ij->i", e1, p)
    # near-parallel segments give meaningless barycentrics; skip them
    size = np.linalg.norm(d, axis=1) * np.linalg.norm(e1, axis=1) * np.linalg.norm(e2, axis=1)
    ok = np.abs(det) > PARALLEL_TOL * size
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    s = P0 - A
    uu = np.einsum("ij,ij->i", s, p) * inv
    q = np.cross(s, e1)
    vv = np.einsum("ij,ij->i", d, q) * inv
    tt = np.einsum("ij,ij->i", e2, q) * inv
    return ok & (uu > eps) & (vv > eps) & (uu + vv < 1 - eps) & (tt > eps) & (tt < 1 - eps)


def _candidate_pairs(cent, rad):
    """Triangle pairs whose bounding spheres overlap, by size classes."""
    cls = np.floor(np.log2(np.maximum(rad, 1e-300))).astype(int)
    out = []
    levels = np.unique(cls)
    trees = {}
    for L in levels:
        idx = np.nonzero(cls == L)[0]
        trees[L] = (idx, cKDTree(cent[idx]), float(rad[idx].max()))
    for ai, La in enumerate(levels):
        ia, ta, ra = trees[La]
        for Lb in levels[ai:]:
            ib, tb, rb = trees[Lb]
            if La == Lb:
                pr = ta.query_pairs(2 * ra, output_type="ndarray")
                if len(pr):
                    out.append(np.c_[ia[pr[:, 0]], ia[pr[:, 1]]])
            else:
                sm = ta.sparse_distance_matrix(tb, ra + rb, output_type="ndarray")
                if len(sm):
                    out.append(np.c_[ia[sm["i"]], ib[sm["j"]]])
    if not out:
        return np.zeros((0, 2), int)
    pr = np.concatenate(out)
    d = np.linalg.norm(cent[pr[:, 0]] - cent[pr[:, 1]], axis=1)
    return pr[d <= rad[pr[:, 0]] + rad[pr[:, 1]]]


def self_intersection(mesh: TriMesh, eps: float = 1e-9, max_samples: int = 10,
                      chunk: int = 200000) -> IntersectionReport:
    """Count intersecting triangle pairs that share no vertex."""
    V, T = mesh.vertices, mesh.triangles
    P = V[T]
    cent = P.mean(axis=1)
    rad = np.max(np.linalg.norm(P - cent[:, None], axis=2), axis=1)
    pairs = _candidate_pairs(cent, rad)
    if len(pairs):
        ta, tb = T[pairs[:, 0]], T[pairs[:, 1]]
        share = (ta[:, :, None] == tb[:, None, :]).any(axis=(1, 2))
        pairs = pairs[~share]
    hits = np.zeros(len(pairs), bool)
    for s in range(0, len(pairs), chunk):
        pr = pairs[s:s + chunk]
        A, B = P[pr[:, 0]], P[pr[:, 1]]
        h = np.zeros(len(pr), bool)
        for X, Y in ((A, B), (B, A)):
            for i, j in ((0, 1), (1, 2), (2, 0)):
                h |= _seg_tri(X[:, i], X[:, j], Y[:, 0], Y[:, 1], Y[:, 2], eps)
        hits[s:s + chunk] = h
    where = pairs[hits]
    samples = tuple(tuple(float(v) for v in cent[a]) for a, _ in where[:max_samples])
    return IntersectionReport(int(hits.sum()), int(len(pairs)), samples, dict(mesh.truncation))


# ---------------------------------------------------------------------------
# export

def export_mesh(mesh: TriMesh, fmt: str, path) -> None:
    """ASCII OBJ (v/vn/f) or PLY with normals and a gauss_k property."""
    fmt = fmt.lower()
    if fmt not in ("obj", "ply"):
        raise ParamOutOfRange("format must be obj or ply", format=fmt)
    f9 = "{:.9g}".format
    try:
        with open(path, "w") as fh:
            if fmt == "obj":
                fh.write(f"# {mesh.name} resolution {mesh.resolution}\n")
                for v in mesh.vertices:
                    fh.write(f"v {f9(v[0])} {f9(v[1])} {f9(v[2])}\n")
                for n in mesh.normals:
                    fh.write(f"vn {f9(n[0])} {f9(n[1])} {f9(n[2])}\n")
                for t in mesh.triangles + 1:
                    fh.write(f"f {t[0]}//{t[0]} {t[1]}//{t[1]} {t[2]}//{t[2]}\n")
            else:
                fh.write("ply\nformat ascii 1.0\n")
                fh.write(f"comment {mesh.name}\n")
                fh.write(f"element vertex {len(mesh.vertices)}\n")
                for c in ("x", "y", "z", "nx", "ny", "nz", "gauss_k"):
                    fh.write(f"property double {c}\n")
                fh.write(f"element face {len(mesh.triangles)}\n")
                fh.write("property list uchar int vertex_indices\nend_header\n")
                for v, n, k in zip(mesh.vertices, mesh.normals, mesh.gauss_k):
                    fh.write(" ".join(f9(a) for a in (*v, *n, k)) + "\n")
                for t in mesh.triangles:
                    fh.write(f"3 {t[0]} {t[1]} {t[2]}\n")
    except OSError as exc:
        raise IoError(str(exc), path=str(path)) from exc


def read_obj(path):
    """Vertices and faces of an OBJ written by export_mesh."""
    vs, fs = [], []
    with open(path) as fh:
        for line in fh:
            if line.startswith("v "):
                vs.append([float(a) for a in line.split()[1:4]])
            elif line.startswith("f "):
                fs.append([int(a.split("/")[0]) - 1 for a in line.split()[1:4]])
    return np.array(vs), np.array(fs, dtype=int)


def mesh_summary(mesh: TriMesh) -> dict:
    ncomp = connected_components(
        coo_matrix((np.ones(len(mesh.edges())), tuple(mesh.edges().T)),
                   shape=(len(mesh.vertices),) * 2), directed=False)[0]
    return {"vertices": int(len(mesh.vertices)), "triangles": int(len(mesh.triangles)),
            "euler_characteristic": mesh.euler_characteristic(), "components": int(ncomp),
            "copies": mesh.copies, "symmetric_copies": mesh.symmetric_copies,
            "truncation": dict(mesh.truncation)}
