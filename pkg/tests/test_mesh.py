import numpy as np
import pytest

from isoform import MeshTopologyError, SurfaceMesh, build_surface
from isoform import generators as gen


def test_tetrahedron_counts():
    mesh = build_surface([(0, 1, 2), (0, 2, 3), (0, 3, 1), (1, 3, 2)])
    assert mesh.is_closed
    assert mesh.chi == 2
    assert mesh.genus == 0
    assert mesh.edge_count == 6
    assert len(mesh.boundary_vertices) == 0


def test_single_triangle_is_disk():
    mesh = build_surface([(0, 1, 2)])
    assert mesh.chi == 1
    assert len(mesh.boundary_vertices) == 3
    assert len(mesh.boundary_loops) == 1
    assert sorted(mesh.boundary_loops[0]) == [0, 1, 2]


def test_doubled_face_rejected():
    with pytest.raises(MeshTopologyError):
        build_surface([(0, 1, 2), (0, 2, 1)])


def test_non_manifold_edge_rejected():
    with pytest.raises(MeshTopologyError, match="non-manifold"):
        build_surface([(0, 1, 2), (0, 1, 3), (0, 1, 4)])


def test_disconnected_rejected():
    with pytest.raises(MeshTopologyError):
        build_surface([(0, 1, 2), (3, 4, 5), (3, 5, 6)])


def test_unused_vertex_rejected():
    with pytest.raises(MeshTopologyError):
        build_surface([(0, 1, 3)])  # vertex 2 missing


def test_degenerate_face_rejected():
    with pytest.raises(MeshTopologyError):
        build_surface([(0, 1, 1)])


def test_bowtie_rejected():
    # two triangles sharing only a vertex: not face-connected
    with pytest.raises(MeshTopologyError):
        build_surface([(0, 1, 2), (0, 3, 4), (1, 2, 5), (3, 4, 6)])


def test_bad_vertex_link_rejected():
    # face-connected complex whose vertex 0 carries two separate fans
    tris = [
        (0, 1, 2), (0, 2, 3),          # fan one at vertex 0
        (0, 4, 5), (0, 5, 6),          # fan two at vertex 0
        (2, 1, 7), (1, 7, 4), (4, 7, 5),  # bridge away from vertex 0
    ]
    with pytest.raises(MeshTopologyError, match="link"):
        build_surface(tris)


def test_moebius_band_rejected():
    # minimal 5-vertex triangulated Möbius band
    tris = [(0, 1, 2), (1, 2, 3), (2, 3, 4), (3, 4, 0), (4, 0, 1)]
    with pytest.raises(MeshTopologyError, match="orientable"):
        build_surface(tris)


def test_inconsistent_winding_reoriented():
    mesh = build_surface([(0, 1, 2), (1, 2, 3)])  # second face mis-wound
    # after reorientation each interior edge appears once per direction
    he = set(zip(mesh.he_src.tolist(), mesh.he_dst.tolist()))
    assert len(he) == 3 * mesh.face_count
    for e in mesh.interior_edges:
        i, j = mesh.edges[e]
        assert (i, j) in he and (j, i) in he


def test_counting_identity_on_generators(grid5, jessen):
    for mesh in (grid5.mesh, jessen.mesh, gen.cut_annulus(0.5, 1, 3, 8).mesh):
        lhs = mesh.interior_edge_count - 3 * len(mesh.interior_vertices)
        rhs = len(mesh.boundary_vertices) - 3 * mesh.chi
        assert lhs == rhs


def test_boundary_loop_orientation(grid5):
    mesh = grid5.mesh
    (loop,) = mesh.boundary_loops
    assert len(loop) == len(mesh.boundary_vertices)
    # consecutive loop vertices are joined by boundary edges
    for a, b in zip(loop, loop[1:] + loop[:1]):
        e = mesh.edge_id(a, b)
        assert e is not None and not mesh.is_interior_edge[e]


def test_orientation_reversal_swaps_left_right(grid5):
    mesh = grid5.mesh
    rev = mesh.reversed_orientation()
    assert rev.chi == mesh.chi
    assert rev.edge_count == mesh.edge_count
    for e in mesh.interior_edges[:10]:
        i, j = mesh.edges[e]
        er = rev.edge_id(i, j)
        fl = set(mesh.triangles[mesh.edge_face_left[e]])
        fr_rev = set(rev.triangles[rev.edge_face_right[er]])
        assert fl == fr_rev


def test_vertex_star_faces_cover(grid5):
    mesh = grid5.mesh
    for v in range(mesh.vertex_count):
        faces = mesh.vertex_star_faces(v)
        expected = {f for f in range(mesh.face_count) if v in mesh.triangles[f]}
        assert set(faces) == expected
        assert len(faces) == len(expected)


def test_report_schema(grid5):
    rep = grid5.mesh.report()
    assert rep["chi"] == 1
    assert rep["genus"] is None
    assert rep["counts"]["vertices"] == 25
    assert rep["boundary_loops"] == [16]


def test_genus_of_torus():
    # 7-vertex Möbius–Kantor torus (the minimal triangulated torus)
    tris = []
    for i in range(7):
        tris.append((i, (i + 1) % 7, (i + 3) % 7))
        tris.append(((i + 1) % 7, (i + 4) % 7, (i + 3) % 7))
    mesh = build_surface(tris)
    assert mesh.is_closed
    assert mesh.chi == 0
    assert mesh.genus == 1
