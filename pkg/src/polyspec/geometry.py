"""Polygons, triangulations and piecewise-linear deformation families.

A :class:`Polygon` is a validated, counterclockwise simple closed polygon.  A
:class:`TriMesh` is a conforming triangulation of one; meshes whose points are
exactly the polygon vertices are called *structural*.  A
:class:`DeformationPath` is the linear family ``f_t = (1 - t) Id + t f`` of
piecewise-linear maps defined by moving the points of a mesh.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DegenerateGeometry,
    DegeneratesAlongPath,
    DuplicateVertex,
    MeshingFailed,
    NotStructuralMesh,
    ParameterOutOfRange,
    PathDegenerate,
    SelfIntersecting,
    TooFewVertices,
    VertexCountMismatch,
)

#: Relative tolerance of the orientation predicate fallback.
ORIENT_EPS = 1e-14

#: Minimum angle (degrees) requested from the quality mesher.
MIN_ANGLE_DEG = 20.0


class TooSmallWarning(UserWarning):
    """The dual tree of a triangle has a single node."""


def _readonly(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def orient(a, b, c) -> float:
    """Sign-robust orientation of the triple (a, b, c).

    Returns the doubled signed area, snapped to exactly 0.0 when its magnitude
    is below ``ORIENT_EPS`` times the product of the two edge lengths.
    """
    ux, uy = b[0] - a[0], b[1] - a[1]
    vx, vy = c[0] - a[0], c[1] - a[1]
    d = ux * vy - uy * vx
    if abs(d) <= ORIENT_EPS * math.hypot(ux, uy) * math.hypot(vx, vy):
        return 0.0
    return d


def _on_segment(p, a, b) -> bool:
    # assumes p collinear with ab
    tol = ORIENT_EPS * max(abs(a[0]), abs(a[1]), abs(b[0]), abs(b[1]), 1.0)
    return (
        min(a[0], b[0]) - tol <= p[0] <= max(a[0], b[0]) + tol
        and min(a[1], b[1]) - tol <= p[1] <= max(a[1], b[1]) + tol
    )


def segments_intersect(p1, p2, q1, q2) -> bool:
    """True if the closed segments p1p2 and q1q2 share at least one point."""
    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)
    ):
        return True
    if d1 == 0 and _on_segment(p1, q1, q2):
        return True
    if d2 == 0 and _on_segment(p2, q1, q2):
        return True
    if d3 == 0 and _on_segment(q1, p1, p2):
        return True
    if d4 == 0 and _on_segment(q2, p1, p2):
        return True
    return False


def signed_area(points) -> float:
    p = np.asarray(points, dtype=float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


# ---------------------------------------------------------------------------
# Polygon


@dataclass(frozen=True, eq=False)
class Polygon:
    """A simple polygon with counterclockwise vertex order.

    Construct through :func:`validate_polygon`; the raw constructor performs no
    checks.
    """

    vertices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vertices", _readonly(self.vertices))

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def area(self) -> float:
        return signed_area(self.vertices)

    @property
    def diameter(self) -> float:
        d = self.vertices[:, None, :] - self.vertices[None, :, :]
        return float(np.sqrt((d**2).sum(-1)).max())

    @property
    def radius(self) -> float:
        """Largest distance of a vertex from the origin."""
        return float(np.hypot(self.vertices[:, 0], self.vertices[:, 1]).max())

    def edge(self, i: int):
        return self.vertices[i], self.vertices[(i + 1) % self.n]

    def false_vertices(self, tol: float = 1e-12) -> list[int]:
        """Indices of vertices collinear with both neighbours."""
        v = self.vertices
        out = []
        for i in range(self.n):
            a, b, c = v[i - 1], v[i], v[(i + 1) % self.n]
            ux, uy = b - a
            wx, wy = c - b
            scale = math.hypot(ux, uy) * math.hypot(wx, wy)
            if abs(ux * wy - uy * wx) <= tol * scale:
                out.append(i)
        return out

    def is_convex(self) -> bool:
        v = self.vertices
        for i in range(self.n):
            if orient(v[i - 1], v[i], v[(i + 1) % self.n]) < 0:
                return False
        return True

    def to_json(self) -> dict:
        return {"vertices": self.vertices.tolist()}


def validate_polygon(points: Sequence[Sequence[float]]) -> Polygon:
    """Validate a vertex list and return a counterclockwise :class:`Polygon`.

    Collinear consecutive triples ("false" vertices) are accepted.  A clockwise
    input is reversed while keeping its first vertex first, so that two
    polygons given with the same labelling stay in correspondence.

    Raises
    ------
    TooFewVertices, DuplicateVertex, SelfIntersecting, DegenerateGeometry
    """
    p = np.asarray(points, dtype=float)
    if p.ndim != 2 or p.shape[1] != 2:
        raise DegenerateGeometry(f"expected a list of 2D points, got shape {p.shape}")
    n = len(p)
    if n < 3:
        raise TooFewVertices(f"polygon needs at least 3 vertices, got {n}")
    if not np.all(np.isfinite(p)):
        raise DegenerateGeometry("non-finite vertex coordinates")
    for i in range(n):
        if np.array_equal(p[i], p[(i + 1) % n]):
            raise DuplicateVertex(f"vertices {i} and {(i + 1) % n} coincide")
    _check_simple(p)
    area = signed_area(p)
    if area == 0.0:
        raise DegenerateGeometry("polygon has zero area")
    if area < 0:
        p = np.concatenate([p[:1], p[:0:-1]])
    return Polygon(p)


def _check_simple(p: np.ndarray) -> None:
    n = len(p)
    for i in range(n):
        a, b, c = p[i - 1], p[i], p[(i + 1) % n]
        # adjacent edges must meet only at the shared vertex
        if orient(a, b, c) == 0.0 and np.dot(a - b, c - b) > 0:
            raise SelfIntersecting((i - 1) % n, i, f"edges {(i - 1) % n} and {i} overlap")
    for i in range(n):
        p1, p2 = p[i], p[(i + 1) % n]
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if segments_intersect(p1, p2, p[j], p[(j + 1) % n]):
                raise SelfIntersecting(i, j)


def rectangle(s1: float, s2: float) -> Polygon:
    """Axis-aligned rectangle ``[0, s1] x [0, s2]``."""
    return validate_polygon([(0.0, 0.0), (s1, 0.0), (s1, s2), (0.0, s2)])


def regular_polygon(n: int, radius: float = 1.0, phase: float = 0.0) -> Polygon:
    ang = phase + 2 * np.pi * np.arange(n) / n
    return validate_polygon(np.column_stack([radius * np.cos(ang), radius * np.sin(ang)]))


def translate(P: Polygon, offset) -> Polygon:
    """Translate a polygon.  Not an isometry of curved Klein metrics."""
    return Polygon(P.vertices + np.asarray(offset, dtype=float))


def drop_false_vertices(P: Polygon, tol: float = 1e-12) -> Polygon:
    """Reinterpret ``P`` with its collinear vertices removed."""
    keep = [i for i in range(P.n) if i not in set(P.false_vertices(tol))]
    return validate_polygon(P.vertices[keep])


# ---------------------------------------------------------------------------
# Meshes


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Conforming triangle mesh.

    Attributes
    ----------
    points : (N, 2) float array
    triangles : (F, 3) int array, counterclockwise
    boundary : (N,) bool array, True on the polygon boundary
    parent : Polygon or None
    level : int
        Number of uniform refinements applied to the originating mesh.
    """

    points: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray
    parent: Optional[Polygon] = None
    level: int = 0
    structural: bool = field(default=False)

    def __post_init__(self):
        object.__setattr__(self, "points", _readonly(self.points))
        object.__setattr__(self, "triangles", _readonly(self.triangles, np.int64).reshape(-1, 3))
        object.__setattr__(self, "boundary", _readonly(self.boundary, bool))

    @property
    def n_points(self) -> int:
        return len(self.points)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def areas(self) -> np.ndarray:
        p = self.points[self.triangles]
        u = p[:, 1] - p[:, 0]
        v = p[:, 2] - p[:, 0]
        return 0.5 * (u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])

    def edges(self):
        """Unique sorted edges and the number of triangles using each."""
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e.sort(axis=1)
        uniq, counts = np.unique(e, axis=0, return_counts=True)
        return uniq, counts

    def boundary_edges(self) -> np.ndarray:
        e, c = self.edges()
        return e[c == 1]

    def edge_lengths(self) -> np.ndarray:
        e, _ = self.edges()
        d = self.points[e[:, 1]] - self.points[e[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    def max_edge(self) -> float:
        return float(self.edge_lengths().max())

    def angles(self) -> np.ndarray:
        """Interior angles in degrees, shape (F, 3)."""
        p = self.points[self.triangles]
        out = np.empty((self.n_triangles, 3))
        for i in range(3):
            u = p[:, (i + 1) % 3] - p[:, i]
            v = p[:, (i + 2) % 3] - p[:, i]
            cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
            dot = (u * v).sum(1)
            out[:, i] = np.degrees(np.arctan2(np.abs(cross), dot))
        return out

    def min_angle(self) -> float:
        return float(self.angles().min())

    def dual_graph(self) -> list[list[int]]:
        """Adjacency lists of the triangle dual graph (shared full edges)."""
        owner: dict[tuple[int, int], list[int]] = {}
        for f, tri in enumerate(self.triangles.tolist()):
            for i in range(3):
                a, b = tri[i], tri[(i + 1) % 3]
                owner.setdefault((min(a, b), max(a, b)), []).append(f)
        adj: list[list[int]] = [[] for _ in range(self.n_triangles)]
        for fs in owner.values():
            if len(fs) == 2:
                adj[fs[0]].append(fs[1])
                adj[fs[1]].append(fs[0])
        return [sorted(a) for a in adj]

    def check(self, area: Optional[float] = None, rtol: float = 1e-12) -> None:
        """Assert the mesh invariants; raises ``DegenerateGeometry``."""
        a = self.areas()
        if np.any(a <= 0):
            raise DegenerateGeometry(f"triangle {int(np.argmin(a))} is not positively oriented")
        e, c = self.edges()
        if np.any(c > 2):
            raise DegenerateGeometry("an edge is shared by more than two triangles")
        used = np.unique(self.triangles)
        if len(used) != self.n_points:
            raise DegenerateGeometry("mesh has unreferenced points")
        if self.n_points - len(e) + self.n_triangles != 1:
            raise DegenerateGeometry("Euler characteristic of a disk violated")
        if area is None and self.parent is not None:
            area = self.parent.area
        if area is not None and abs(a.sum() - area) > rtol * abs(area):
            raise DegenerateGeometry(f"area sum {a.sum()!r} differs from polygon area {area!r}")

    def with_points(self, points, parent=None) -> "TriMesh":
        return TriMesh(points, self.triangles, self.boundary, parent, self.level, self.structural)

    def to_json(self) -> dict:
        return {
            "index_offset": 0,
            "points": self.points.tolist(),
            "triangles": self.triangles.tolist(),
            "boundary": np.flatnonzero(self.boundary).tolist(),
        }


def _ear_quality(a, b, c) -> float:
    """Smallest angle of the triangle (a, b, c) in radians."""
    best = math.pi
    pts = (a, b, c)
    for i in range(3):
        p, q, r = pts[i], pts[(i + 1) % 3], pts[(i + 2) % 3]
        u = (q[0] - p[0], q[1] - p[1])
        v = (r[0] - p[0], r[1] - p[1])
        best = min(best, abs(math.atan2(u[0] * v[1] - u[1] * v[0], u[0] * v[0] + u[1] * v[1])))
    return best


def _point_in_closed_triangle(p, a, b, c) -> bool:
    return orient(a, b, p) >= 0 and orient(b, c, p) >= 0 and orient(c, a, p) >= 0


def triangulate_structural(P: Polygon) -> TriMesh:
    """Diagonals-only triangulation by ear clipping.

    Among the available ears the one with the largest minimum angle is clipped
    (lowest vertex index on ties).  Zero-area ears at false vertices are never
    clipped.

    Raises
    ------
    DegenerateGeometry
        If no ear can be found.
    """
    v = [tuple(x) for x in P.vertices.tolist()]
    remaining = list(range(P.n))
    tris = []
    while len(remaining) > 3:
        m = len(remaining)
        best = None
        for k in range(m):
            i0, i1, i2 = remaining[k - 1], remaining[k], remaining[(k + 1) % m]
            a, b, c = v[i0], v[i1], v[i2]
            if orient(a, b, c) <= 0:
                continue
            if any(
                _point_in_closed_triangle(v[j], a, b, c)
                for j in remaining
                if j not in (i0, i1, i2)
            ):
                continue
            q = _ear_quality(a, b, c)
            if best is None or q > best[0]:
                best = (q, k)
        if best is None:
            raise DegenerateGeometry(
                f"no ear found among {m} remaining vertices (first: {remaining[0]})"
            )
        k = best[1]
        tris.append((remaining[k - 1], remaining[k], remaining[(k + 1) % m]))
        del remaining[k]
    a, b, c = (v[i] for i in remaining)
    if orient(a, b, c) <= 0:
        raise DegenerateGeometry(f"final triangle at vertex {remaining[0]} is degenerate")
    tris.append(tuple(remaining))
    return TriMesh(P.vertices, np.array(tris), np.ones(P.n, bool), P, 0, True)


def triangulate_steiner(P: Polygon, target_h: float, min_angle: float = MIN_ANGLE_DEG) -> TriMesh:
    """Quality mesh of ``P`` with maximum edge length at most ``target_h``.

    Backed by Shewchuk's Triangle.  The minimum-angle bound holds away from
    input corners whose angle is itself below ``min_angle``.

    Raises
    ------
    MeshingFailed
    """
    if not (target_h > 0 and math.isfinite(target_h)):
        raise MeshingFailed(f"target_h must be positive, got {target_h!r}")
    try:
        import triangle
    except ImportError as exc:  # pragma: no cover
        raise MeshingFailed("the 'triangle' package is required for Steiner meshing") from exc
    n = P.n
    seg = np.column_stack([np.arange(n), (np.arange(n) + 1) % n])
    area = math.sqrt(3) / 4 * target_h**2
    for _ in range(40):
        out = triangle.triangulate(
            {"vertices": P.vertices.copy(), "segments": seg},
            f"pq{min_angle:.6f}a{area:.20f}Q",
        )
        pts = out["vertices"]
        tris = out["triangles"]
        mesh = TriMesh(pts, tris, out["vertex_markers"].ravel() != 0, P, 0, False)
        if not np.allclose(pts[:n], P.vertices, rtol=0, atol=0):
            raise MeshingFailed("mesher reordered input vertices")
        if mesh.max_edge() <= target_h:
            break
        area *= 0.5
    else:
        raise MeshingFailed(f"could not reach max edge {target_h} (got {mesh.max_edge():.4g})")
    a = mesh.areas()
    if np.any(a <= 0):
        raise MeshingFailed("mesher produced a non-positive triangle")
    return mesh


def refine(M: TriMesh, levels: int = 1) -> TriMesh:
    """Uniform red refinement: every triangle is split into 4 at edge midpoints."""
    if levels < 0:
        raise ValueError("levels must be nonnegative")
    for _ in range(levels):
        M = _refine_once(M)
    return M


def _refine_once(M: TriMesh) -> TriMesh:
    t = M.triangles
    F = len(t)
    e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    es = np.sort(e, axis=1)
    uniq, inv, counts = np.unique(es, axis=0, return_inverse=True, return_counts=True)
    inv = inv.ravel()
    mids = 0.5 * (M.points[uniq[:, 0]] + M.points[uniq[:, 1]])
    bmid = counts == 1
    base = M.n_points
    m01, m12, m20 = (base + inv[k * F:(k + 1) * F] for k in range(3))
    a, b, c = t[:, 0], t[:, 1], t[:, 2]
    children = np.stack(
        [
            np.column_stack([a, m01, m20]),
            np.column_stack([m01, b, m12]),
            np.column_stack([m20, m12, c]),
            np.column_stack([m01, m12, m20]),
        ],
        axis=1,
    ).reshape(-1, 3)
    return TriMesh(
        np.concatenate([M.points, mids]),
        children,
        np.concatenate([M.boundary, bmid]),
        M.parent,
        M.level + 1,
        False,
    )


def base_levels(M: TriMesh, fraction: float = 0.25, length: Optional[float] = None) -> int:
    """Refinements needed so the max edge is at most ``fraction * diameter``."""
    if length is None:
        if M.parent is not None:
            diam = M.parent.diameter
        else:
            d = M.points[:, None, :] - M.points[None, :, :]
            diam = float(np.sqrt((d**2).sum(-1)).max())
        length = fraction * diam
    h = M.max_edge()
    lv = 0
    while h / 2**lv > length * (1 + 1e-9):
        lv += 1
    return lv


def fem_mesh(P: Polygon, level: int, base: str = "structural", target_h: Optional[float] = None) -> TriMesh:
    """Mesh used for eigenvalue computations at a given refinement level.

    ``base="structural"`` refines the ear-clipping triangulation until its
    longest edge is at most a quarter of the polygon diameter, then applies
    ``level`` further uniform refinements.  ``base="steiner"`` starts from a
    quality mesh with maximum edge ``target_h`` (default: diameter / 4).
    """
    if base == "structural":
        M = triangulate_structural(P)
        M = refine(M, base_levels(M))
    elif base == "steiner":
        M = triangulate_steiner(P, target_h or P.diameter / 4)
    else:
        raise ValueError(f"unknown base mesh {base!r}")
    return refine(M, level)


def crisscross_rectangle(s1: float, s2: float) -> TriMesh:
    """Rectangle ``[0, s1] x [0, s2]`` split by both diagonals.

    For ``s1 == s2`` the mesh and all its uniform refinements carry the full
    symmetry group of the square, so discrete eigenvalues inherit its
    two-dimensional multiplicities exactly.
    """
    P = rectangle(s1, s2)
    pts = np.vstack([P.vertices, [[0.5 * s1, 0.5 * s2]]])
    tris = np.array([[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]])
    return TriMesh(pts, tris, np.r_[np.ones(4, bool), False], P, 0, False)


def rectangle_mesh(s1: float, s2: float, level: int) -> TriMesh:
    """Criss-cross rectangle mesh refined to the ``fem_mesh`` base, plus ``level``."""
    M = crisscross_rectangle(s1, s2)
    return refine(M, base_levels(M) + level)


def dual_tree_end(M: TriMesh) -> tuple[int, int]:
    """A leaf triangle of the dual tree and its vertex bounded by two polygon sides.

    The leaf with the smallest triangle index is returned.  For a single
    triangle a :class:`TooSmallWarning` is issued and vertex 0 of it returned.

    Raises
    ------
    NotStructuralMesh
    """
    if not M.structural or not np.all(M.boundary):
        raise NotStructuralMesh("dual-tree analysis needs a structural triangulation")
    if M.n_triangles == 1:
        warnings.warn("triangle: dual tree has a single node", TooSmallWarning, stacklevel=2)
        return 0, int(M.triangles[0, 0])
    adj = M.dual_graph()
    bnd = {tuple(sorted(e)) for e in M.boundary_edges().tolist()}
    for f, nb in enumerate(adj):
        if len(nb) != 1:
            continue
        tri = M.triangles[f].tolist()
        for i in range(3):
            v = tri[i]
            s1 = tuple(sorted((v, tri[(i + 1) % 3])))
            s2 = tuple(sorted((v, tri[(i - 1) % 3])))
            if s1 in bnd and s2 in bnd:
                return f, v
    raise NotStructuralMesh("dual graph has no leaf; mesh is not a triangulated disk")


# ---------------------------------------------------------------------------
# Deformation paths


def _orientation_coeffs(src: np.ndarray, dst: np.ndarray, tris: np.ndarray) -> np.ndarray:
    """Coefficients (c0, c1, c2) of det(t) = c0 + c1 t + c2 t^2 per triangle."""
    p = src[tris]
    d = dst[tris] - p
    a, b = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    da, db = d[:, 1] - d[:, 0], d[:, 2] - d[:, 0]

    def cross(u, v):
        return u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]

    return np.column_stack([cross(a, b), cross(a, db) + cross(da, b), cross(da, db)])


def _quadratic_min01(c0, c1, c2) -> np.ndarray:
    """Minimum over t in [0, 1] of c0 + c1 t + c2 t^2 (vectorized, exact form)."""
    vals = [c0, c0 + c1 + c2]
    with np.errstate(divide="ignore", invalid="ignore"):
        ts = np.where(c2 > 0, -c1 / (2 * c2), 0.0)
    ts = np.clip(ts, 0.0, 1.0)
    vals.append(c0 + c1 * ts + c2 * ts**2)
    return np.min(vals, axis=0)


def _nonpositive_interval(c0, c1, c2) -> tuple[float, float]:
    """Sub-interval of [0, 1] on which c0 + c1 t + c2 t^2 <= 0."""
    if c2 == 0.0:
        roots = [] if c1 == 0 else [-c0 / c1]
    else:
        disc = c1 * c1 - 4 * c0 * c2
        if disc < 0:
            roots = []
        else:
            s = math.sqrt(disc)
            q = -0.5 * (c1 + math.copysign(s, c1))
            roots = sorted(r for r in (q / c2, c0 / q if q != 0 else math.inf) if math.isfinite(r))
    pts = sorted({0.0, 1.0, *[min(max(r, 0.0), 1.0) for r in roots]})
    bad = [t for t in pts if c0 + c1 * t + c2 * t * t <= 0]
    if not bad:
        mids = [(x + y) / 2 for x, y in zip(pts, pts[1:])]
        bad = [t for t in mids if c0 + c1 * t + c2 * t * t <= 0]
    return (min(bad), max(bad)) if bad else (math.nan, math.nan)


@dataclass(frozen=True, eq=False)
class DeformationPath:
    """Linear family of PL maps ``x -> (1 - t) x + t f(x)`` on a source mesh."""

    source: TriMesh
    target: np.ndarray
    target_polygon: Optional[Polygon] = None

    def __post_init__(self):
        object.__setattr__(self, "target", _readonly(self.target))
        if self.target.shape != self.source.points.shape:
            raise VertexCountMismatch("target positions must match source points")

    def positions(self, t: float) -> np.ndarray:
        if not (0.0 <= t <= 1.0):
            raise ParameterOutOfRange(f"t must lie in [0, 1], got {t!r}")
        if t == 0.0:
            return np.array(self.source.points)
        if t == 1.0:
            return np.array(self.target)
        return (1.0 - t) * self.source.points + t * self.target

    def orientation_coefficients(self) -> np.ndarray:
        return _orientation_coeffs(self.source.points, self.target, self.source.triangles)

    def min_orientation(self) -> np.ndarray:
        """Exact minimum over t in [0, 1] of each triangle's doubled area."""
        c = self.orientation_coefficients()
        return _quadratic_min01(c[:, 0], c[:, 1], c[:, 2])

    def check(self) -> None:
        """Raise ``DegeneratesAlongPath`` unless every triangle stays positive."""
        c = self.orientation_coefficients()
        m = _quadratic_min01(c[:, 0], c[:, 1], c[:, 2])
        bad = np.flatnonzero(m <= 0)
        if len(bad):
            f = int(bad[0])
            raise DegeneratesAlongPath(f, _nonpositive_interval(*c[f]))

    def jacobians(self, t: float) -> np.ndarray:
        """Per-triangle derivative ``D f_t``, shape (F, 2, 2)."""
        return _jacobians(self.source.points, self.positions(t), self.source.triangles)

    def bilipschitz_constant(self) -> float:
        """A constant ``C`` with ``C <= sigma(D f_t) <= 1/C`` for all t in [0, 1].

        The largest singular value is convex in t, so it is bounded by its
        endpoint values; the smallest is bounded below by the exact minimum of
        det(D f_t) divided by that bound.
        """
        J1 = self.jacobians(1.0)
        smax = np.maximum(1.0, np.linalg.svd(J1, compute_uv=False)[:, 0])
        c = self.orientation_coefficients()
        detmin = _quadratic_min01(c[:, 0], c[:, 1], c[:, 2]) / c[:, 0]
        return float(np.min(np.minimum(1.0 / smax, detmin / smax)))

    def refined(self, levels: int) -> "DeformationPath":
        """The same family on a uniformly refined source mesh."""
        src = self.source
        tgt = np.asarray(self.target)
        for _ in range(levels):
            fine = _refine_once(src)
            e = np.sort(
                np.concatenate([src.triangles[:, [0, 1]], src.triangles[:, [1, 2]], src.triangles[:, [2, 0]]]),
                axis=1,
            )
            uniq = np.unique(e, axis=0)
            tgt = np.concatenate([tgt, 0.5 * (tgt[uniq[:, 0]] + tgt[uniq[:, 1]])])
            src = fine
        return DeformationPath(src, tgt, self.target_polygon)

    def polygon_at(self, t: float) -> Optional[Polygon]:
        P = self.source.parent
        if P is None:
            return None
        return Polygon(self.positions(t)[: P.n])


def _jacobians(src, dst, tris) -> np.ndarray:
    p, q = src[tris], dst[tris]
    E = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)
    D = np.stack([q[:, 1] - q[:, 0], q[:, 2] - q[:, 0]], axis=2)
    return D @ np.linalg.inv(E)


def _boundary_targets(P: Polygon, Q: Polygon, M: TriMesh) -> np.ndarray:
    """Targets moving polygon vertices P -> Q and boundary points along edges."""
    target = np.array(M.points, dtype=float)
    scale = max(P.diameter, 1.0)
    tol = 1e-12 * scale
    V, W = P.vertices, Q.vertices
    for idx in np.flatnonzero(M.boundary):
        x = M.points[idx]
        d = np.hypot(*(V - x).T)
        i = int(np.argmin(d))
        if d[i] <= tol:
            target[idx] = W[i]
            continue
        for i in range(P.n):
            a, b = V[i], V[(i + 1) % P.n]
            ab = b - a
            s = float(np.dot(x - a, ab) / np.dot(ab, ab))
            if -1e-12 <= s <= 1 + 1e-12 and np.hypot(*(a + s * ab - x)) <= tol:
                target[idx] = (1 - s) * W[i] + s * W[(i + 1) % P.n]
                break
        else:
            raise DegenerateGeometry(f"boundary point {idx} does not lie on the polygon")
    return target


def pl_family(P: Polygon, Q: Polygon, M: Optional[TriMesh] = None) -> DeformationPath:
    """Linear PL family carrying ``P`` onto ``Q`` through the triangulation ``M``.

    Polygon vertices move to the corresponding vertices of ``Q``; points on
    polygon edges move along the edges; interior points stay fixed.

    Raises
    ------
    VertexCountMismatch
    DegeneratesAlongPath
        If some triangle loses orientation for a t in [0, 1], i.e. ``Q`` lies
        outside the neighbourhood of ``P`` reachable with this triangulation.
    """
    if P.n != Q.n:
        raise VertexCountMismatch(f"{P.n} vs {Q.n} vertices")
    if M is None:
        M = triangulate_structural(P)
    target = _boundary_targets(P, Q, M)
    path = DeformationPath(M, target, Q)
    path.check()
    return path


def linear_path(M: TriMesh, A, target_polygon: Optional[Polygon] = None) -> DeformationPath:
    """Path of the global linear map ``x -> A x`` (every point moves)."""
    A = np.asarray(A, dtype=float)
    path = DeformationPath(M, M.points @ A.T, target_polygon)
    path.check()
    return path


def rectangle_width_path(s1: float, s_from: float, s_to: float, level: int = 0) -> DeformationPath:
    """Rectangles ``[0, s1] x [0, s]`` for ``s`` from ``s_from`` to ``s_to``.

    Defined on the criss-cross mesh (refined as in :func:`rectangle_mesh`), so
    the mesh at ``s == s1`` is the symmetric square mesh.  The parameter is
    ``t = (s - s_from) / (s_to - s_from)``.
    """
    M = rectangle_mesh(s1, s_from, level)
    return linear_path(M, np.diag([1.0, s_to / s_from]), rectangle(s1, s_to))


def map_mesh(path: DeformationPath, t: float) -> TriMesh:
    """The mesh ``f_t(M)``: same connectivity, moved points."""
    pts = path.positions(t)
    P = path.source.parent
    parent = Polygon(pts[: P.n]) if P is not None else None
    return path.source.with_points(pts, parent)


def delete_vertex_path(P: Polygon) -> tuple[DeformationPath, Polygon]:
    """Linear path sliding an ear vertex onto the midpoint of its diagonal.

    With ``T = (a, v, b)`` the leaf triangle from :func:`dual_tree_end` and
    ``m = (a + b) / 2``, the vertex ``v`` moves linearly to ``m`` while all
    other vertices stay put; at ``t = 1`` the polygon has ``m`` as a false
    vertex.  ``T`` itself collapses at ``t = 1``, so the returned path lives on
    a mesh where ``T`` and its dual neighbour ``(a, b, c)`` are replaced by a
    fan around one fixed interior point ``w`` near ``m``.

    Returns
    -------
    path : DeformationPath
    endpoint : Polygon
        ``P`` with ``v`` replaced by ``m``.
    """
    if P.n < 4:
        raise TooFewVertices(f"vertex deletion needs n >= 4, got {P.n}")
    S = triangulate_structural(P)
    f, v = dual_tree_end(S)
    n = P.n
    a, b = (v - 1) % n, (v + 1) % n
    V = P.vertices
    m = 0.5 * (V[a] + V[b])
    adj = S.dual_graph()[f]
    g = adj[0]
    c = next(x for x in S.triangles[g].tolist() if x not in (a, b))
    keep = [i for i in range(S.n_triangles) if i not in (f, g)]
    centroid = V[[a, b, c]].mean(axis=0)
    s = 0.5
    for _ in range(60):
        w = m + s * (centroid - m)
        pts = np.vstack([V, w])
        wi = n
        fan = np.array([[wi, a, v], [wi, v, b], [wi, b, c], [wi, c, a]])
        tris = np.vstack([S.triangles[keep], fan])
        mesh = TriMesh(pts, tris, np.r_[np.ones(n, bool), False], P, 0, False)
        target = np.array(pts)
        target[v] = m
        path = DeformationPath(mesh, target)
        if np.all(path.min_orientation() > 0):
            break
        s *= 0.5
    else:
        raise PathDegenerate("no admissible interior point for the vertex-deletion fan")
    endpoint_pts = np.array(V)
    endpoint_pts[v] = m
    endpoint = Polygon(endpoint_pts)
    object.__setattr__(path, "target_polygon", endpoint)
    for t in (0.5, 1.0):
        try:
            _check_simple(path.positions(t)[:n])
        except SelfIntersecting as exc:  # pragma: no cover - construction invariant
            raise PathDegenerate(f"P_t self-intersects at t={t}") from exc
    return path, endpoint
