"""Acceptance checks, grouped into named suites for ``polyspec validate``.

Each check returns a :class:`Result`; a check never loosens its tolerance to
pass.
"""
from __future__ import annotations

import math
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .assembly import assemble, assemble_pullback, rescale_metric
from .deform import (
    locate_degeneracy,
    min_gap,
    random_gap_probe,
    random_polygon,
    relative_gaps,
    scaling_path,
    sweep_kappa,
    sweep_t,
)
from .eigensolve import smallest_eigenpairs
from .errors import DegeneratesAlongPath
from .geometry import (
    Polygon,
    base_levels,
    delete_vertex_path,
    fem_mesh,
    map_mesh,
    orient,
    pl_family,
    rectangle,
    rectangle_mesh,
    rectangle_width_path,
    translate,
    triangulate_steiner,
    triangulate_structural,
    validate_polygon,
)
from .io import dumps
from .metric import MetricSpec, check_gaussian_curvature, klein_rotation, metric_tensor, volume_density
from .oracle import RectSpec, rect_branch, rect_crossing, rect_spectrum

PI2 = math.pi**2


@dataclass
class Result:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _timed(name):
    def deco(fn):
        def run() -> Result:
            t0 = time.perf_counter()
            ok, detail = fn()
            return Result(name, bool(ok), detail, time.perf_counter() - t0)

        run.__name__ = fn.__name__
        run.title = name
        return run

    return deco


def _rel(a, b, floor=0.0):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return np.abs(a - b) / np.maximum(np.abs(b), floor)


# 1 -------------------------------------------------------------------------
@_timed("1 rectangle oracle")
def rectangle_oracle():
    t0 = time.perf_counter()
    notes, ok = [], True
    for bc in ("dirichlet", "neumann"):
        exact = np.array([m.eigenvalue for m in rect_spectrum(RectSpec(1.0, 1.0, bc), 6)])
        errs = {}
        for L in (3, 4):
            S = smallest_eigenpairs(assemble(rectangle_mesh(1.0, 1.0, L), None, bc), 6)
            errs[L] = S.eigenvalues - exact
            lam4 = S.eigenvalues
        j0 = 1 if bc == "neumann" else 0
        rel = np.abs(errs[4][j0:]) / exact[j0:]
        factors = errs[3][j0:] / errs[4][j0:]
        ok &= bool(np.all(rel < 0.01)) and bool(np.all((factors >= 3.5) & (factors <= 4.5)))
        if bc == "neumann":
            ok &= abs(lam4[0]) < 1e-8 * lam4[1]
            notes.append(f"|lam1|/lam2={abs(lam4[0]) / lam4[1]:.1e}")
        notes.append(f"{bc}: max rel err {rel.max():.2e}, factors [{factors.min():.2f}, {factors.max():.2f}]")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 60
    return ok, "; ".join(notes) + f"; runtime {elapsed:.1f}s"


# 2 -------------------------------------------------------------------------
@_timed("2 degeneracy resolution")
def degeneracy_resolution():
    S = smallest_eigenpairs(assemble(rectangle_mesh(1.0, 1.0, 4)), 4)
    S.meta["bc"] = "dirichlet"
    lam = S.eigenvalues
    gap = (lam[2] - lam[1]) / lam[1]
    j, g = min_gap(S, j_max=3)
    near = abs(lam[1] / (5 * PI2) - 1) < 0.01
    return gap < 1e-9 and j == 2 and near, f"pair at {lam[1]:.6f} ~ 5pi^2, relative gap {gap:.1e}, min_gap j={j}"


# 3 -------------------------------------------------------------------------
def _random_paths(count, seed):
    P = validate_polygon([(0.0, 0.0), (1.0, 0.0), (1.1, 0.9), (-0.1, 1.2)])
    M = triangulate_structural(P)
    rng = np.random.default_rng(seed)
    paths = []
    while len(paths) < count:
        Q = Polygon(P.vertices + 0.25 * rng.standard_normal(P.vertices.shape))
        try:
            paths.append(pl_family(P, validate_polygon(Q.vertices), M))
        except Exception:
            continue
    return paths, base_levels(M) + 2


@_timed("3 exact pullback equivalence")
def pullback_equivalence():
    t0 = time.perf_counter()
    paths, lv = _random_paths(20, seed=2024)
    worst = 0.0
    for path in paths:
        fine = path.refined(lv)
        for t in (0.25, 0.5, 1.0):
            a = smallest_eigenpairs(assemble_pullback(fine, t), 8).eigenvalues
            b = smallest_eigenpairs(assemble(map_mesh(fine, t)), 8).eigenvalues
            worst = max(worst, float(_rel(a, b).max()))
    elapsed = time.perf_counter() - t0
    return worst <= 1e-10 and elapsed < 120, f"max relative deviation {worst:.2e} over 20 paths x 3 t; runtime {elapsed:.1f}s"


# 4 -------------------------------------------------------------------------
@_timed("4 scaling laws")
def scaling_laws():
    worst_a = 0.0
    for P in (rectangle(1.0, 1.0), validate_polygon([(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)])):
        path = scaling_path(P, 2.0, levels=2)
        for bc in ("dirichlet", "neumann"):
            l0 = smallest_eigenpairs(assemble_pullback(path, 0.0, bc), 6).eigenvalues
            l1 = smallest_eigenpairs(assemble_pullback(path, 1.0, bc), 6).eigenvalues
            # constant modes are zero up to roundoff on both sides; compare
            # them against the spectral scale instead of against each other
            zero = np.abs(l0) < 1e-8 * l0.max()
            worst_a = max(worst_a, float(_rel(l1[~zero], l0[~zero] / 4).max()))
            if zero.any():
                worst_a = max(worst_a, float(np.abs(l1[zero]).max() / l1.max()))
    worst_b = 0.0
    mesh = fem_mesh(translate(rectangle(1.0, 1.0), (-0.5, -0.5)), 2)
    for kappa in (0.0, -0.5, 1.0):
        F = assemble(mesh, MetricSpec(kappa))
        base = smallest_eigenpairs(F, 6).eigenvalues
        for c in (0.5, 3.0):
            lr = smallest_eigenpairs(rescale_metric(F, c), 6).eigenvalues
            ld = smallest_eigenpairs(assemble(mesh, MetricSpec(kappa, c)), 6).eigenvalues
            worst_b = max(worst_b, float(_rel(lr, base / c).max()), float(_rel(ld, base / c).max()))
    return worst_a <= 1e-10 and worst_b <= 1e-12, f"(a) domain x2: {worst_a:.1e}; (b) metric scale: {worst_b:.1e}"


# 5 -------------------------------------------------------------------------
@_timed("5 curvature correctness")
def curvature_correctness():
    rng = np.random.default_rng(5)
    worst_k = 0.0
    for kappa in (-0.5, 1.0):
        spec = MetricSpec(kappa)
        r = rng.uniform(0.0, 1.0, 20) ** 0.5
        a = rng.uniform(0, 2 * np.pi, 20)
        for p in np.column_stack([r * np.cos(a), r * np.sin(a)]):
            worst_k = max(worst_k, abs(check_gaussian_curvature(spec, p, 1e-3) - kappa))
    worst_v = 0.0
    for kappa in (-0.9, -0.5, 0.0, 0.5, 1.0, 4.0):
        spec = MetricSpec(kappa)
        R = min(spec.radius, 2.0)
        r = 0.999 * R * rng.uniform(0.0, 1.0, 1000) ** 0.5
        a = rng.uniform(0, 2 * np.pi, 1000)
        p = np.column_stack([r * np.cos(a), r * np.sin(a)])
        G = metric_tensor(spec, p)
        rho = volume_density(spec, p)
        worst_v = max(worst_v, float(_rel(np.sqrt(np.linalg.det(G)), rho).max()))
    return worst_k <= 1e-4 and worst_v <= 1e-13, f"curvature err {worst_k:.1e}; density err {worst_v:.1e}"


# 6 -------------------------------------------------------------------------
@_timed("6 kappa continuity")
def kappa_continuity():
    P = translate(rectangle(1.0, 1.0), (-0.5, -0.5))
    mesh = fem_mesh(P, 2)
    l0 = smallest_eigenpairs(assemble(mesh, MetricSpec(0.0)), 6).eigenvalues
    l1 = smallest_eigenpairs(assemble(mesh, MetricSpec(1e-4)), 6).eigenvalues
    change = float(_rel(l1, l0).max())
    D = sweep_kappa(P, "dirichlet", 6, np.linspace(-0.5, 2.0, 26), mesh=mesh)
    finite = bool(np.all(np.isfinite(D.values)))
    jump = float(D.max_relative_jump().max())
    return change <= 1e-3 and finite and jump < 0.10, f"kappa 0 -> 1e-4 change {change:.1e}; sweep max jump {jump:.3f}"


# 7 -------------------------------------------------------------------------
@_timed("7 crossing localization")
def crossing_localization():
    s0, s1 = 0.8, 1.2
    path = rectangle_width_path(1.0, s0, s1, level=3)
    rep = locate_degeneracy(path, 2, (0.0, 1.0), tol_param=1e-8)
    s_star = s0 + (s1 - s0) * rep.param
    a = rect_branch(1.0, (s0, s1), (1, 2))
    b = rect_branch(1.0, (s0, s1), (2, 1))
    s_exact = rect_crossing(a, b)
    lam = smallest_eigenpairs(assemble_pullback(path, rep.param), 4).eigenvalues[1]
    dev = abs(lam - a(s_exact)) / a(s_exact)
    ok = abs(s_star - 1.0) <= 1e-3 and rep.gap < 1e-6 and abs(s_exact - 1.0) < 1e-15
    ok &= dev <= 2 * rep.discretization_error_estimate and abs(a(1.0) - 5 * PI2) < 1e-12
    return ok, (
        f"s*={s_star:.9f}, gap*={rep.gap:.1e}, lambda={lam:.5f} vs 5pi^2={5 * PI2:.5f} "
        f"(dev {dev:.1e}, est. error {rep.discretization_error_estimate:.1e})"
    )


# 8 -------------------------------------------------------------------------
@_timed("8 false-vertex invariance")
def false_vertex_invariance():
    h = 0.05
    sq = validate_polygon([(0, 0), (1, 0), (1, 1), (0, 1)])
    sq5 = validate_polygon([(0, 0), (1, 0), (1, 1), (0.5, 1), (0, 1)])
    a = smallest_eigenpairs(assemble(triangulate_steiner(sq, h)), 6).eigenvalues
    b = smallest_eigenpairs(assemble(triangulate_steiner(sq5, h)), 6).eigenvalues
    dev = float(_rel(b, a).max())
    return dev <= 5e-3 and sq5.false_vertices() == [3], f"max relative difference {dev:.1e} at target_h={h}"


# 9 -------------------------------------------------------------------------
@_timed("9 vertex-deletion path")
def vertex_deletion():
    P = random_polygon(np.random.default_rng(9), 5, convex=True)
    path, end = delete_vertex_path(P)
    valid = bool(np.all(path.min_orientation() > 0))
    v = int(np.flatnonzero(np.any(path.target[: P.n] != P.vertices, axis=1))[0])
    a, m, b = end.vertices[v - 1], end.vertices[v], end.vertices[(v + 1) % P.n]
    col = abs((m[0] - a[0]) * (b[1] - a[1]) - (m[1] - a[1]) * (b[0] - a[0])) / np.hypot(*(b - a)) ** 2
    fine = path.refined(base_levels(path.source) + 2)
    jump = float(sweep_t(fine, "dirichlet", 6, 41).max_relative_jump().max())
    # diagnostic only: a smooth branch shrinks its step about 4x with 4x the samples
    dense = float(sweep_t(fine, "dirichlet", 6, 161).max_relative_jump().max())
    return valid and col <= 1e-12 and jump <= 0.05, (
        f"min det {path.min_orientation().min():.3e}, collinearity {col:.1e}, max jump {jump:.4f} "
        f"(161 samples: {dense:.4f}), endpoint/initial area {end.area / P.area:.3f}"
    )


# 10 ------------------------------------------------------------------------
@_timed("10 isometry invariance")
def isometry_invariance():
    P = validate_polygon([(0.1, -0.2), (0.8, 0.0), (0.6, 0.7), (-0.3, 0.5)])
    mesh = fem_mesh(P, 2)
    rot = klein_rotation(math.pi / 5)
    rmesh = mesh.with_points(rot(mesh.points), Polygon(rot(P.vertices)))
    worst = 0.0
    for kappa in (-0.5, 1.0):
        a = smallest_eigenpairs(assemble(mesh, MetricSpec(kappa)), 6).eigenvalues
        b = smallest_eigenpairs(assemble(rmesh, MetricSpec(kappa)), 6).eigenvalues
        worst = max(worst, float(_rel(b, a).max()))
    return worst <= 1e-10, f"max relative difference {worst:.1e}"


# 11 ------------------------------------------------------------------------
@_timed("11 genericity probe")
def genericity_probe():
    t0 = time.perf_counter()
    texts = []
    for _ in range(2):
        res = random_gap_probe(4, 50, seed=11, bc="dirichlet", k=8, level=1)
        with tempfile.TemporaryDirectory() as d:
            f = Path(d) / "probe.json"
            f.write_text(dumps(res.to_json()))
            texts.append(f.read_bytes())
    elapsed = time.perf_counter() - t0
    ok = res.min > 1e-6 and texts[0] == texts[1] and elapsed < 600
    return ok, f"min gap {res.min:.2e}, median {res.median:.2e}, reproducible={texts[0] == texts[1]}, runtime {elapsed:.0f}s"


# 12 ------------------------------------------------------------------------
@_timed("12 min-max upper bound")
def minmax_upper_bound():
    s2 = 2.0**0.25
    exact = np.array([m.eigenvalue for m in rect_spectrum(RectSpec(1.0, s2), 10)])
    violations = 0
    worst = math.inf
    for L in (2, 3, 4, 5):
        lam = smallest_eigenpairs(assemble(rectangle_mesh(1.0, s2, L)), 10).eigenvalues
        violations += int(np.sum(lam < exact))
        worst = min(worst, float(np.min((lam - exact) / exact)))
    return violations == 0, f"{violations} violations; smallest (fem - exact)/exact = {worst:.2e}"


ALL = [
    rectangle_oracle,
    degeneracy_resolution,
    pullback_equivalence,
    scaling_laws,
    curvature_correctness,
    kappa_continuity,
    crossing_localization,
    false_vertex_invariance,
    vertex_deletion,
    isometry_invariance,
    genericity_probe,
    minmax_upper_bound,
]

SUITES = {
    "rectangle": [rectangle_oracle, degeneracy_resolution, minmax_upper_bound],
    "pullback": [pullback_equivalence],
    "scaling": [scaling_laws],
    "curvature": [curvature_correctness, kappa_continuity, isometry_invariance],
    "crossing": [crossing_localization, vertex_deletion],
    "false-vertex": [false_vertex_invariance],
    "probe": [genericity_probe],
    "all": ALL,
}


def run_suite(name: str, out=print) -> bool:
    results = [check() for check in SUITES[name]]
    for r in results:
        out(r.line())
    return all(r.passed for r in results)
