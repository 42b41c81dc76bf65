import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyspec.errors import (
    DegeneratesAlongPath,
    DuplicateVertex,
    MeshingFailed,
    NotStructuralMesh,
    ParameterOutOfRange,
    SelfIntersecting,
    TooFewVertices,
    VertexCountMismatch,
)
from polyspec.geometry import (
    DeformationPath,
    Polygon,
    crisscross_rectangle,
    delete_vertex_path,
    dual_tree_end,
    fem_mesh,
    map_mesh,
    orient,
    pl_family,
    rectangle,
    refine,
    regular_polygon,
    triangulate_steiner,
    triangulate_structural,
    validate_polygon,
)

SQUARE = [(0, 0), (1, 0), (1, 1), (0, 1)]
L_SHAPE = [(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)]


def test_square_valid():
    P = validate_polygon(SQUARE)
    assert P.n == 4 and P.area == 1.0


def test_clockwise_reversed_keeping_first():
    P = validate_polygon(SQUARE[::-1])
    assert P.area == 1.0
    assert tuple(P.vertices[0]) == (0.0, 1.0)


def test_bowtie():
    with pytest.raises(SelfIntersecting) as exc:
        validate_polygon([(0, 0), (1, 1), (1, 0), (0, 1)])
    assert sorted(exc.value.edges) == [0, 2]


def test_too_few_and_duplicates():
    with pytest.raises(TooFewVertices):
        validate_polygon([(0, 0), (1, 0)])
    with pytest.raises(DuplicateVertex):
        validate_polygon([(0, 0), (1, 0), (1, 0), (0, 1)])


def test_false_vertex_kept():
    P = validate_polygon([(0, 0), (1, 0), (1, 1), (0.5, 1), (0, 1)])
    assert P.n == 5
    assert P.false_vertices() == [3]


def test_vertices_read_only():
    P = validate_polygon(SQUARE)
    with pytest.raises(ValueError):
        P.vertices[0, 0] = 3.0


def test_orient_snaps_tiny():
    assert orient((0, 0), (1, 0), (2, 1e-17)) == 0.0
    assert orient((0, 0), (1, 0), (0, 1)) == 1.0


def test_l_shape_structural():
    M = triangulate_structural(validate_polygon(L_SHAPE))
    assert M.n_triangles == 4
    assert np.all(M.areas() > 0)
    assert M.areas().sum() == pytest.approx(3.0, rel=1e-15)
    M.check(3.0)


def test_dual_tree_end_sides_on_boundary():
    P = validate_polygon(L_SHAPE)
    M = triangulate_structural(P)
    f, v = dual_tree_end(M)
    tri = M.triangles[f].tolist()
    assert v in tri
    n = P.n
    for w in ((v - 1) % n, (v + 1) % n):
        assert w in tri


def test_dual_tree_end_needs_structural():
    M = refine(triangulate_structural(validate_polygon(SQUARE)), 1)
    with pytest.raises(NotStructuralMesh):
        dual_tree_end(M)


def star_polygon(radii):
    n = len(radii)
    ang = 2 * np.pi * np.arange(n) / n
    r = np.asarray(radii)
    return validate_polygon(np.column_stack([r * np.cos(ang), r * np.sin(ang)]))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.3, 1.0), min_size=3, max_size=20))
def test_structural_is_tree(radii):
    P = star_polygon(radii)
    M = triangulate_structural(P)
    assert M.n_points == P.n
    assert M.n_triangles == P.n - 2
    assert np.all(M.areas() > 0)
    adj = M.dual_graph()
    # connected with F - 1 edges -> tree
    assert sum(len(a) for a in adj) // 2 == M.n_triangles - 1
    seen, stack = {0}, [0]
    while stack:
        for g in adj[stack.pop()]:
            if g not in seen:
                seen.add(g)
                stack.append(g)
    assert len(seen) == M.n_triangles
    assert M.areas().sum() == pytest.approx(P.area, rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(0.4, 1.0), min_size=3, max_size=12), st.integers(1, 2))
def test_refine_preserves_euler_and_area(radii, levels):
    P = star_polygon(radii)
    M = refine(triangulate_structural(P), levels)
    assert M.n_triangles == (P.n - 2) * 4**levels
    M.check(P.area, rtol=1e-12)
    assert M.boundary.sum() == P.n * 2**levels


def test_steiner_quality():
    P = validate_polygon(L_SHAPE)
    M = triangulate_steiner(P, 0.2)
    assert M.max_edge() <= 0.2
    assert M.min_angle() >= 20.0 - 1e-9
    M.check(3.0, rtol=1e-12)
    with pytest.raises(MeshingFailed):
        triangulate_steiner(P, 0.0)


def test_crisscross_symmetric():
    M = crisscross_rectangle(1.0, 1.0)
    assert M.n_points == 5 and M.n_triangles == 4
    assert not M.boundary[4]


def test_fem_mesh_size():
    P = rectangle(1.0, 1.0)
    M = fem_mesh(P, 1)
    assert M.max_edge() <= P.diameter / 8 + 1e-12


def test_pl_family_endpoints():
    P = validate_polygon(SQUARE)
    Q = validate_polygon([(0, 0), (2, 0), (2, 1), (0, 1.5)])
    path = pl_family(P, Q)
    np.testing.assert_array_equal(path.positions(0.0), P.vertices)
    np.testing.assert_array_equal(path.positions(1.0)[:4], Q.vertices)
    with pytest.raises(ParameterOutOfRange):
        path.positions(1.5)
    with pytest.raises(VertexCountMismatch):
        pl_family(P, validate_polygon([(0, 0), (1, 0), (0, 1)]))


def test_path_exact_check_agrees_with_sampling():
    rng = np.random.default_rng(3)
    P = validate_polygon(SQUARE)
    M = triangulate_structural(P)
    ts = np.linspace(0, 1, 101)
    for _ in range(40):
        Q = P.vertices + 0.5 * rng.standard_normal((4, 2))
        path = DeformationPath(M, Q)
        sampled = min(
            min(orient(*path.positions(t)[tri]) for tri in M.triangles) for t in ts
        )
        exact = path.min_orientation().min()
        assert exact <= sampled + 1e-12
        if sampled <= 0:
            with pytest.raises(DegeneratesAlongPath):
                path.check()


def test_degenerates_reports_interval():
    M = triangulate_structural(validate_polygon(SQUARE))
    Q = np.array(M.points)
    Q[2] = (-1.0, -1.0)  # vertex crosses over the opposite corner
    with pytest.raises(DegeneratesAlongPath) as exc:
        DeformationPath(M, Q).check()
    lo, hi = exc.value.interval
    assert 0 < lo <= hi <= 1


def test_bilipschitz_bounds_singular_values():
    P = validate_polygon(SQUARE)
    Q = validate_polygon([(0, 0), (2, 0), (2.2, 1.3), (-0.1, 0.9)])
    path = pl_family(P, Q)
    C = path.bilipschitz_constant()
    for t in np.linspace(0, 1, 51):
        s = np.linalg.svd(path.jacobians(t), compute_uv=False)
        assert s.min() >= C - 1e-12
        assert s.max() <= 1 / C + 1e-12


def test_refined_path_consistent():
    P = validate_polygon(L_SHAPE)
    Q = validate_polygon([(0, 0), (2.5, 0), (2.5, 1), (1, 1.2), (1, 2), (0, 2.2)])
    path = pl_family(P, Q)
    fine = path.refined(2)
    coarse_mesh = map_mesh(path, 0.7)
    fine_mesh = map_mesh(fine, 0.7)
    assert fine_mesh.areas().sum() == pytest.approx(coarse_mesh.areas().sum(), rel=1e-13)


@pytest.mark.parametrize("n", [4, 5, 7])
def test_delete_vertex_regular(n):
    P = regular_polygon(n)
    path, end = delete_vertex_path(P)
    assert np.all(path.min_orientation() > 0)
    np.testing.assert_array_equal(path.positions(0.0)[:n], P.vertices)
    assert len(end.false_vertices(1e-12)) == 1
    # the endpoint is still a simple polygon
    validate_polygon(end.vertices)


def test_delete_vertex_square_with_false_vertex():
    P = validate_polygon([(0, 0), (1, 0), (1, 1), (0.5, 1), (0, 1)])
    path, end = delete_vertex_path(P)
    assert np.all(path.min_orientation() > 0)
    assert len(end.false_vertices()) >= 1


def test_delete_vertex_quad_gives_triangle():
    P = validate_polygon(SQUARE)
    _, end = delete_vertex_path(P)
    assert len(end.false_vertices()) == 1
    assert end.area == pytest.approx(0.5)


def test_delete_vertex_needs_four():
    with pytest.raises(TooFewVertices):
        delete_vertex_path(regular_polygon(3))


def test_mesh_json_offsets():
    M = triangulate_structural(validate_polygon(SQUARE))
    d = M.to_json()
    assert d["index_offset"] == 0
    assert d["boundary"] == [0, 1, 2, 3]
