import math

import numpy as np
import pytest
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from minsurf.catalog import make_surface
from minsurf.errors import NonzeroPeriod, ParamOutOfRange
from minsurf.mesh import (end_fit, export_mesh, mesh_summary, read_obj, self_intersection,
                          tessellate, total_curvature)
from minsurf.riemann_domain import ChartPath, SurfacePoint, arc_piece
from minsurf.weierstrass import integrate_immersion, normal_from_g


def _boundary_loops(m):
    be = m.boundary_edges()
    if len(be) == 0:
        return 0
    n = len(m.vertices)
    A = coo_matrix((np.ones(len(be)), (be[:, 0], be[:, 1])), shape=(n, n))
    ncomp, lab = connected_components(A, directed=False)
    return len(np.unique(lab[np.unique(be)]))


@pytest.fixture(scope="module")
def catenoid_fixed(catenoid):
    return tessellate(catenoid, 64, {"p0": 1 / 8, "infinity": 8})


def test_catenoid_annulus(catenoid_fixed):
    m = catenoid_fixed
    assert m.euler_characteristic() == 0
    assert _boundary_loops(m) == 2
    assert mesh_summary(m)["components"] == 1


def test_catenoid_vertices_closed_form(catenoid_fixed):
    z = catenoid_fixed.z
    X = np.c_[-0.5 * (z + 1 / z).real, -0.5 * (z - 1 / z).imag, np.log(np.abs(z))]
    assert np.max(np.abs(X - catenoid_fixed.vertices)) < 1e-6


def test_catenoid_waist_is_planar_circle(catenoid):
    pts = []
    for th in np.linspace(0.3, 2 * np.pi - 0.3, 7):
        pc = arc_piece(catenoid.domain, 0j, 1.0, 0.0, th, 0j)
        X = integrate_immersion(catenoid, ChartPath((1 + 0j, np.exp(1j * th)),
                                                    SurfacePoint(1 + 0j), False, (pc,)))
        pts.append(np.array(catenoid.info["base_X"]) + X)
    pts = np.array(pts)
    assert np.max(np.abs(pts[:, 2])) < 1e-6
    assert np.max(np.abs(np.hypot(pts[:, 0], pts[:, 1]) - 1)) < 1e-6


def test_mkx_euler_characteristic(mkx_mesh):
    assert mkx_mesh.euler_characteristic() == 2 - 2 * 1 - 3
    assert _boundary_loops(mkx_mesh) == 3


def test_chen_gackstatter_euler_characteristic():
    m = tessellate(make_surface("chen_gackstatter"), 32)
    assert m.euler_characteristic() == -1
    assert _boundary_loops(m) == 1


def test_normals_match_gauss_map(catenoid_fixed, mkx_mesh):
    for m, b in ((catenoid_fixed, make_surface("catenoid")),
                 (mkx_mesh, make_surface("mkx", {"k": 2, "alpha": math.pi / 4}))):
        assert np.allclose(np.linalg.norm(m.normals, axis=1), 1, atol=1e-12)
        # compare against normals of the geometry: area weighted face normals
        P = m.vertices[m.triangles]
        fn = np.cross(P[:, 1] - P[:, 0], P[:, 2] - P[:, 0])
        vn = np.zeros_like(m.vertices)
        for j in range(3):
            np.add.at(vn, m.triangles[:, j], fn)
        vn /= np.linalg.norm(vn, axis=1)[:, None]
        cos = np.abs(np.sum(vn * m.normals, axis=1))
        assert np.median(cos) > 0.999
        assert np.all(np.sign(np.sum(vn * m.normals, axis=1)) ==
                      np.sign(np.sum(vn[0] * m.normals[0])))


def test_gauss_curvature_nonpositive(catenoid_fixed, mkx_mesh):
    assert np.all(catenoid_fixed.gauss_k <= 1e-12)
    assert np.all(mkx_mesh.gauss_k <= 1e-12)


def test_catenoid_mirror_symmetry(catenoid_fixed):
    V = catenoid_fixed.vertices
    d, _ = cKDTree(V).query(V * np.array([1, -1, 1]))
    assert np.max(d) < 1e-9 * catenoid_fixed.scale


def test_no_unwelded_duplicates(mkx_mesh):
    m = mkx_mesh
    pairs = cKDTree(m.vertices).query_pairs(1e-7 * m.scale)
    assert not pairs
    used = np.unique(m.triangles)
    assert len(used) == len(m.vertices)


def test_provenance(mkx_mesh):
    prov = mkx_mesh.provenance
    assert len(prov) == len(mkx_mesh.vertices)
    assert isinstance(prov[0], SurfacePoint)


def test_obj_round_trip(tmp_path, mkx_mesh):
    p = tmp_path / "m.obj"
    export_mesh(mkx_mesh, "obj", p)
    V, F = read_obj(p)
    assert np.all(np.abs(V - mkx_mesh.vertices) <= 1e-8 * np.maximum(1, np.abs(V)))
    assert np.array_equal(F, mkx_mesh.triangles)
    text = p.read_text()
    assert text.count("\nvn ") == len(V)


def test_ply_header(tmp_path, catenoid_fixed):
    p = tmp_path / "m.ply"
    export_mesh(catenoid_fixed, "ply", p)
    lines = p.read_text().splitlines()
    head = lines[:lines.index("end_header")]
    assert f"element vertex {len(catenoid_fixed.vertices)}" in head
    assert f"element face {len(catenoid_fixed.triangles)}" in head
    assert "property double gauss_k" in head
    body = lines[len(head) + 1:]
    assert len(body) == len(catenoid_fixed.vertices) + len(catenoid_fixed.triangles)


def test_export_rejects_format(tmp_path, catenoid_fixed):
    with pytest.raises(ParamOutOfRange):
        export_mesh(catenoid_fixed, "stl", tmp_path / "x.stl")


def test_catenoid_total_curvature(catenoid_mesh):
    tc = total_curvature(catenoid_mesh)
    assert abs(tc.value + 4 * math.pi) < 0.005 * 4 * math.pi
    assert abs(tc.quadrature + 4 * math.pi) < 0.01 * 4 * math.pi


def test_catenoid_end_fits(catenoid_mesh):
    # fitted log coefficient equals the growth -Re residue(dh)
    for pid, growth in (("p0", -1.0), ("infinity", 1.0)):
        f = end_fit(catenoid_mesh, pid)
        assert abs(f.alpha - growth) < 0.01


def test_catenoid_embedded(catenoid_mesh):
    assert self_intersection(catenoid_mesh).count == 0


def test_mk_middle_end_flat(mkx_mesh):
    assert abs(end_fit(mkx_mesh, "middle").alpha) < 0.01


def test_period_failure_blocks_meshing():
    with pytest.raises(NonzeroPeriod):
        tessellate(make_surface("neg_lopezros_attempt"), 16)


def test_resolution_floor(catenoid):
    with pytest.raises(ParamOutOfRange):
        tessellate(catenoid, 4)
