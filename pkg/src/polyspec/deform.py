"""Eigenvalue branches along deformation and curvature parameters.

Sweeps solve the discrete problem at a list of parameter values and match the
resulting eigenvalues into branches.  Matching follows sorted order, except
inside clusters of nearly equal eigenvalues where eigenvector overlaps decide,
so that branches are followed through crossings instead of being relabeled.
"""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial import ConvexHull

from .assembly import DIRICHLET, NEUMANN, assemble, assemble_pullback, check_bc
from .eigensolve import Spectrum, smallest_eigenpairs
from .errors import (
    InvalidInput,
    KappaOutOfRange,
    NoMinimumInBracket,
    PolyspecError,
    ResidualsTooLarge,
    SamplingFailed,
    TooFewEigenvalues,
)
from .geometry import (
    DeformationPath,
    Polygon,
    TriMesh,
    base_levels,
    fem_mesh,
    map_mesh,
    validate_polygon,
)
from .metric import MetricSpec

#: Relative gap below which neighbouring eigenvalues are matched by overlap.
CLUSTER_WINDOW = 0.1

#: Overlap below which a branch step is flagged as a near-crossing.
OVERLAP_FLOOR = 0.7


class ReentrantCornerWarning(UserWarning):
    """P1 eigenvalues converge slowly on polygons with reflex corners."""


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("POLYSPEC_WORKERS", "1")))
    except ValueError:
        return 1


def _ordered_map(fn, items):
    items = list(items)
    w = _workers()
    if w == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=w) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# gaps


def relative_gaps(values, floor: Optional[float] = None, skip_zero: bool = False) -> np.ndarray:
    """``(l[j+1] - l[j]) / max(l[j], floor)`` for sorted ``values``.

    With ``skip_zero`` the first entry (Neumann constant mode) is set to inf.
    """
    v = np.asarray(values, dtype=float)
    if floor is None:
        floor = 1e-8 * max(float(np.max(np.abs(v))), 1e-300)
    g = np.diff(v) / np.maximum(v[:-1], floor)
    if skip_zero and len(g):
        g[0] = np.inf
    return g


def _is_neumann(S: Spectrum) -> bool:
    return S.meta.get("bc") == NEUMANN


def min_gap(S: Spectrum, j_max: Optional[int] = None, floor: Optional[float] = None) -> tuple[int, float]:
    """Smallest relative gap ``(j, gap)`` for 1-based ``j <= j_max``.

    Gap ``j`` compares eigenvalues ``j`` and ``j + 1``.  For Neumann spectra
    the gap above the zero mode is skipped.
    """
    lam = np.asarray(S.eigenvalues)
    if len(lam) < 2:
        raise TooFewEigenvalues("need at least two eigenvalues")
    g = relative_gaps(lam, floor, skip_zero=_is_neumann(S))
    if j_max is not None:
        g = g[: max(1, min(j_max, len(g)))]
    if not np.any(np.isfinite(g)):
        raise TooFewEigenvalues("no gap above the Neumann zero mode")
    j = int(np.argmin(g))
    return j + 1, float(g[j])


def richardson(coarse, fine, rate: float = 4.0):
    """Two-level extrapolation and error estimate of the fine values."""
    coarse = np.asarray(coarse, dtype=float)
    fine = np.asarray(fine, dtype=float)
    delta = (fine - coarse) / (rate - 1.0)
    return fine + delta, np.abs(delta)


@dataclass
class Certificate:
    """Per-gap simplicity verdicts for ``j = 1 .. j_max``.

    ``simple`` is the discrete verdict.  ``continuum`` is only filled when a
    coarser spectrum was supplied: it requires each absolute gap to exceed
    the summed Richardson error estimates of its two eigenvalues.
    """

    j: list
    gaps: list
    simple: list
    eps_gap: float
    error_estimate: Optional[list] = None
    continuum: Optional[list] = None
    caveat: str = (
        "verdicts concern the discrete spectrum at this mesh level; "
        "continuum simplicity is claimed only where the gap exceeds the "
        "estimated discretization error"
    )

    @property
    def all_simple(self) -> bool:
        return all(self.simple)


def certify_simple(S: Spectrum, j_max: int, eps_gap: float, coarse: Optional[Spectrum] = None) -> Certificate:
    """Certify gaps ``1..j_max`` of ``S`` above ``eps_gap`` (relative).

    Raises
    ------
    ResidualsTooLarge
        If some residual is not below ``eps_gap / 10``.
    """
    if np.max(S.residuals) >= eps_gap / 10:
        raise ResidualsTooLarge(
            f"max residual {np.max(S.residuals):.3e} not below eps_gap/10 = {eps_gap / 10:.3e}"
        )
    lam = np.asarray(S.eigenvalues)
    if len(lam) < j_max + 1:
        raise TooFewEigenvalues(f"need {j_max + 1} eigenvalues, have {len(lam)}")
    g = relative_gaps(lam, skip_zero=False)[:j_max]
    js = list(range(1, j_max + 1))
    simple = [bool(x > eps_gap) for x in g]
    if _is_neumann(S):
        # the zero mode is simple on a connected domain by construction
        simple[0] = bool(lam[1] - lam[0] > eps_gap * max(abs(lam[1]), 1e-300))
    cert = Certificate(js, [float(x) for x in g], simple, eps_gap)
    if coarse is not None:
        _, err = richardson(coarse.eigenvalues[: j_max + 1], lam[: j_max + 1])
        cert.error_estimate = err.tolist()
        cert.continuum = [
            bool(lam[j] - lam[j - 1] > err[j] + err[j - 1]) for j in js
        ]
    return cert


# ---------------------------------------------------------------------------
# branch diagrams


@dataclass
class BranchDiagram:
    """Eigenvalue branches sampled along one parameter.

    ``values[i, b]`` is branch ``b`` at ``samples[i]``; ``order[i, b]`` the
    position of that value in the sorted spectrum of sample ``i``.
    """

    parameter_name: str
    samples: np.ndarray
    values: np.ndarray
    order: np.ndarray
    matching_method: str
    gaps: np.ndarray
    spectra: list = field(default_factory=list, repr=False)
    overlaps: Optional[np.ndarray] = None
    flags: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    extrapolated: Optional[np.ndarray] = None

    @property
    def n_branches(self) -> int:
        return self.values.shape[1]

    @property
    def branches(self) -> list:
        return [list(zip(self.samples.tolist(), self.values[:, b].tolist())) for b in range(self.n_branches)]

    def max_relative_jump(self) -> np.ndarray:
        """Per branch, the largest step ``|v[i+1] - v[i]| / max(|v[i]|, |v[i+1]|)``."""
        v = self.values
        if len(v) < 2:
            return np.zeros(self.n_branches)
        d = np.abs(np.diff(v, axis=0))
        ref = np.maximum(np.abs(v[1:]), np.abs(v[:-1]))
        with np.errstate(invalid="ignore", divide="ignore"):
            r = np.where(ref > 0, d / ref, 0.0)
        return r.max(axis=0)

    def reparametrized(self, name: str, fn: Callable[[np.ndarray], np.ndarray]) -> "BranchDiagram":
        out = BranchDiagram(**{**self.__dict__})
        out.parameter_name = name
        out.samples = np.asarray(fn(self.samples), dtype=float)
        return out

    def to_csv(self) -> str:
        head = ",".join(["param"] + [f"branch_{b}" for b in range(self.n_branches)])
        rows = [head]
        for s, row in zip(self.samples, self.values):
            rows.append(",".join(f"{x:.17g}" for x in (s, *row)))
        return "\n".join(rows) + "\n"


def _clusters(values_prev, values_cur, window):
    """Blocks of consecutive indices whose relative gaps are below ``window``."""
    k = len(values_cur)
    g = np.minimum(relative_gaps(values_prev), relative_gaps(values_cur))
    blocks, start = [], 0
    for j in range(k - 1):
        if not g[j] < window:
            if j > start:
                blocks.append(list(range(start, j + 1)))
            start = j + 1
    if k - 1 > start:
        blocks.append(list(range(start, k)))
    return blocks


def match_branches(spectra: Sequence[Spectrum], masses=None, method: str = "overlap",
                   window: float = CLUSTER_WINDOW):
    """Branch assignment ``order[i, b]`` for a sequence of spectra.

    ``method="order"`` pairs by sorted position.  ``method="overlap"`` pairs by
    sorted position outside clusters and, inside, by maximizing
    ``|x_prev^T M x_cur|`` (``masses[i]`` is the mass matrix of sample ``i``).
    Returns ``(order, overlaps)``.
    """
    S = len(spectra)
    k = min(sp.k for sp in spectra)
    order = np.tile(np.arange(k), (S, 1))
    overlaps = np.ones((S, k))
    if method == "order" or S < 2:
        return order, overlaps
    if method != "overlap":
        raise InvalidInput(f"unknown matching method {method!r}")
    for i in range(1, S):
        prev, cur = spectra[i - 1], spectra[i]
        if prev.eigenvectors is None or cur.eigenvectors is None:
            raise InvalidInput("overlap matching needs eigenvectors")
        X = prev.eigenvectors[:, :k]
        Y = cur.eigenvectors[:, :k]
        MY = masses[i] @ Y if masses is not None else Y
        O = np.abs(X.T @ MY)  # O[a, j]: previous index a vs current index j
        perm = order[i - 1].copy()  # branch -> index at previous sample
        inv = np.empty(k, int)
        inv[perm] = np.arange(k)  # index -> branch
        new = perm.copy()
        for block in _clusters(prev.eigenvalues[:k], cur.eigenvalues[:k], window):
            rows = block  # previous indices
            sub = O[np.ix_(rows, block)]
            r, c = linear_sum_assignment(-sub)
            for a, j in zip(r, c):
                new[inv[rows[a]]] = block[j]
        order[i] = new
        for b in range(k):
            overlaps[i, b] = O[perm[b], new[b]]
    return order, overlaps


def _continuity_flags(values):
    flags = []
    S, k = values.shape
    if S < 3:
        return flags
    d = np.abs(np.diff(values, axis=0))
    for b in range(k):
        for i in range(len(d)):
            nb = [d[j, b] for j in (i - 1, i + 1) if 0 <= j < len(d)]
            if d[i, b] > 4 * max(nb) + 1e-12 * abs(values[i, b]):
                flags.append((i, b, "jump exceeds neighbouring Lipschitz estimate"))
    return flags


def _build_diagram(name, samples, spectra, masses, method, skip_zero):
    order, overlaps = match_branches(spectra, masses, method)
    vals = np.array([sp.eigenvalues[order[i]] for i, sp in enumerate(spectra)])
    gaps = np.array(
        [float(np.min(relative_gaps(sp.eigenvalues, skip_zero=skip_zero))) for sp in spectra]
    )
    flags = _continuity_flags(vals)
    for i, b in zip(*np.nonzero(overlaps < OVERLAP_FLOOR)):
        flags.append((int(i), int(b), "near-crossing: eigenvector overlap below 0.7"))
    return BranchDiagram(name, np.asarray(samples, float), vals, order, method, gaps,
                         list(spectra), overlaps, flags)


def _samples(samples) -> np.ndarray:
    if np.isscalar(samples):
        n = int(samples)
        if n < 2:
            raise InvalidInput("a sweep needs at least 2 samples")
        return np.linspace(0.0, 1.0, n)
    s = np.asarray(samples, dtype=float)
    if len(s) < 1:
        raise InvalidInput("empty sample list")
    return s


def sweep_t(path: DeformationPath, bc: str = DIRICHLET, k: int = 6, samples=11, refine: int = 0,
            method: str = "pullback", matching: str = "overlap", seed: int = 0,
            extrapolate: Optional[bool] = None) -> BranchDiagram:
    """Branches of the discrete spectrum along ``t -> f_t``.

    ``refine`` adds uniform refinements to the path's source mesh.  With
    ``method="pullback"`` the pulled-back forms are assembled on the source
    mesh; ``method="direct"`` assembles on ``f_t(M)``.  Both give the same
    discrete spectra.  Paths through non-convex polygons get one extra
    refinement level, a warning, and (unless ``extrapolate=False``) a
    two-level Richardson extrapolation stored in ``extrapolated``.
    """
    bc = check_bc(bc)
    ts = _samples(samples)
    notes = []
    P0 = path.source.parent
    P1 = path.polygon_at(1.0)
    reentrant = any(p is not None and not p.is_convex() for p in (P0, P1))
    if reentrant:
        warnings.warn("path contains non-convex polygons; adding one refinement level",
                      ReentrantCornerWarning, stacklevel=2)
        notes.append("reentrant corner: +1 refinement level")
        refine += 1
    fine = path.refined(refine)

    def solve(t, p=fine):
        try:
            if method == "pullback":
                F = assemble_pullback(p, float(t), bc)
            elif method == "direct":
                F = assemble(map_mesh(p, float(t)), None, bc)
            else:
                raise InvalidInput(f"unknown assembly method {method!r}")
            S = smallest_eigenpairs(F, k, seed=seed)
        except PolyspecError as exc:
            exc.args = (f"sample t={t!r}: {exc}",)
            raise
        S.meta["t"] = float(t)
        return S, F.M

    out = _ordered_map(solve, ts)
    D = _build_diagram("t", ts, [o[0] for o in out], [o[1] for o in out], matching, bc == NEUMANN)
    D.notes = notes
    if extrapolate is None:
        extrapolate = reentrant
    if extrapolate and refine >= 1:
        coarse = path.refined(refine - 1)
        cs = _ordered_map(lambda t: solve(t, coarse)[0].eigenvalues, ts)
        ext = []
        for i, c in enumerate(cs):
            e, _ = richardson(c, D.spectra[i].eigenvalues)
            ext.append(e[D.order[i]])
        D.extrapolated = np.array(ext)
    return D


def _check_kappas(P_or_mesh, kappas):
    pts = P_or_mesh.vertices if isinstance(P_or_mesh, Polygon) else P_or_mesh.points
    R = float(np.hypot(pts[:, 0], pts[:, 1]).max())
    lo = -1.0 / R**2 if R > 0 else -math.inf
    for kap in kappas:
        if not kap > lo:
            raise KappaOutOfRange(
                f"kappa={float(kap)!r} violates kappa > -1/R^2 = {lo:.6g}: polygon reaches distance "
                f"{R:.6g} from the origin but the disc radius for this kappa is {abs(kap) ** -0.5:.6g}"
            )


def sweep_kappa(P: Polygon, bc: str = DIRICHLET, k: int = 6, kappa_values=(0.0,), level: int = 3,
                mesh: Optional[TriMesh] = None, matching: str = "overlap", seed: int = 0,
                metric_scale: float = 1.0) -> BranchDiagram:
    """Branches of the spectrum of ``P`` under ``g_kappa`` for each kappa.

    A single mesh is reused for every kappa; only the coefficients change.

    Raises
    ------
    KappaOutOfRange
        If some kappa places ``P`` outside the admissible disc.
    """
    bc = check_bc(bc)
    kappas = np.asarray(kappa_values, dtype=float)
    _check_kappas(P, kappas)
    notes = []
    if mesh is None:
        if not P.is_convex():
            warnings.warn("non-convex polygon; adding one refinement level",
                          ReentrantCornerWarning, stacklevel=2)
            notes.append("reentrant corner: +1 refinement level")
            level += 1
        mesh = fem_mesh(P, level)

    def solve(kap):
        try:
            F = assemble(mesh, MetricSpec(float(kap), metric_scale), bc)
            S = smallest_eigenpairs(F, k, seed=seed)
        except PolyspecError as exc:
            exc.args = (f"sample kappa={float(kap)!r}: {exc}",)
            raise
        S.meta["kappa"] = float(kap)
        return S, F.M

    out = _ordered_map(solve, kappas)
    D = _build_diagram("kappa", kappas, [o[0] for o in out], [o[1] for o in out], matching, bc == NEUMANN)
    D.notes = notes
    return D


# ---------------------------------------------------------------------------
# degeneracy search


@dataclass
class DegeneracyReport:
    param: float
    gap: float
    j: int
    mesh_level: int
    parameter_name: str
    evaluations: int
    discretization_error_estimate: Optional[float] = None

    def to_json(self) -> dict:
        return {
            "param*": self.param,
            "gap*": self.gap,
            "j": self.j,
            "mesh_level": self.mesh_level,
            "parameter": self.parameter_name,
            "evaluations": self.evaluations,
            "discretization_error_estimate": self.discretization_error_estimate,
        }


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(fn, a: float, b: float, tol: float):
    """Minimize ``fn`` on ``[a, b]`` to bracket width ``tol``; returns (x, f(x), calls)."""
    calls = 0
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = fn(c), fn(d)
    calls += 2
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = fn(d)
        calls += 1
    return (c, fc, calls) if fc <= fd else (d, fd, calls)


def _spectrum_fn(source, bc, k, refine, seed, level, metric_scale):
    if isinstance(source, DeformationPath):
        fine = source.refined(refine)

        def spec(t, p=fine):
            return smallest_eigenpairs(assemble_pullback(p, t, bc), k, seed=seed)

        def finer(t):
            return smallest_eigenpairs(assemble_pullback(fine.refined(1), t, bc), k, seed=seed)

        return spec, finer, "t", fine.source.level
    if isinstance(source, (Polygon, TriMesh)):
        mesh = source if isinstance(source, TriMesh) else fem_mesh(source, level)
        from .geometry import refine as _refine

        def spec(kap, m=mesh):
            _check_kappas(m, [kap])
            return smallest_eigenpairs(assemble(m, MetricSpec(kap, metric_scale), bc), k, seed=seed)

        def finer(kap):
            return spec(kap, _refine(mesh, 1))

        return spec, finer, "kappa", mesh.level
    raise InvalidInput("source must be a DeformationPath, Polygon or TriMesh")


def locate_degeneracy(source: Union[DeformationPath, Polygon, TriMesh], j: int, bracket: Sequence[float],
                      tol_param: float = 1e-6, *, bc: str = DIRICHLET, k: Optional[int] = None,
                      refine: int = 0, level: int = 3, seed: int = 0, metric_scale: float = 1.0,
                      estimate_error: bool = True) -> DegeneracyReport:
    """Golden-section search for the minimum of gap ``j`` over ``bracket``.

    ``source`` is a deformation path (parameter ``t``) or a polygon / mesh
    (parameter ``kappa``).  The caller judges whether the attained gap counts
    as a degeneracy.

    Raises
    ------
    NoMinimumInBracket
        If no interior point beats both endpoints.
    """
    bc = check_bc(bc)
    a, b = (float(x) for x in bracket)
    if not a < b:
        raise InvalidInput("bracket must satisfy a < b")
    k = k or j + 2
    spec, finer, name, lvl = _spectrum_fn(source, bc, k, refine, seed, level, metric_scale)

    def gap(x):
        lam = spec(x).eigenvalues
        return float(relative_gaps(lam)[j - 1])

    ga, gb = gap(a), gap(b)
    x, gx, calls = golden_section(gap, a, b, tol_param)
    # improvements below solver accuracy are noise, not a minimum
    if not gx < min(ga, gb) * (1.0 - 1e-10):
        raise NoMinimumInBracket(
            f"gap {j} has no interior minimum on [{a}, {b}] (endpoints {ga:.6g}, {gb:.6g})"
        )
    err = None
    if estimate_error:
        lc = spec(x).eigenvalues
        lf = finer(x).eigenvalues
        # error of the coarse level is about 4/3 of the two-level difference
        err = float(np.max(np.abs(lc[j - 1:j + 1] - lf[j - 1:j + 1])) * 4.0 / 3.0 / lc[j - 1])
    return DegeneracyReport(x, gx, j, lvl, name, calls + 2, err)


# ---------------------------------------------------------------------------
# random probe


@dataclass
class ProbeResult:
    n_vertices: int
    bc: str
    k: int
    seed: int
    gaps: np.ndarray
    polygons: list
    hist_edges: np.ndarray
    hist_counts: np.ndarray
    flagged: Optional[str] = None

    @property
    def min(self) -> float:
        return float(np.min(self.gaps))

    @property
    def median(self) -> float:
        return float(np.median(self.gaps))

    def to_json(self) -> dict:
        return {
            "n_vertices": self.n_vertices,
            "bc": self.bc,
            "k": self.k,
            "seed": self.seed,
            "count": len(self.gaps),
            "min_gap": self.min,
            "median_gap": self.median,
            "gaps": self.gaps.tolist(),
            "histogram": {"log10_edges": self.hist_edges.tolist(), "counts": self.hist_counts.tolist()},
            "flag": self.flagged,
            "polygons": [p.vertices.tolist() for p in self.polygons],
        }


def random_polygon(rng: np.random.Generator, n: int, convex: bool = True, max_tries: int = 1000) -> Polygon:
    """Random polygon with ``n`` vertices.

    Convex: sorted random angles with random radii, accepted when all points
    are hull vertices.  General: random points ordered by angle about their
    centroid, rejected unless simple.
    """
    for _ in range(max_tries):
        if convex:
            ang = np.sort(rng.uniform(0.0, 2 * np.pi, n))
            rad = rng.uniform(0.5, 1.0, n)
            pts = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
            try:
                if len(ConvexHull(pts).vertices) != n:
                    continue
            except Exception:  # scipy raises QhullError on degenerate input
                continue
        else:
            pts = rng.uniform(-1.0, 1.0, (n, 2))
            c = pts.mean(axis=0)
            pts = pts[np.argsort(np.arctan2(pts[:, 1] - c[1], pts[:, 0] - c[0]))]
        try:
            P = validate_polygon(pts)
        except PolyspecError:
            continue
        if convex and not P.is_convex():
            continue
        return P
    raise SamplingFailed(f"no valid {n}-gon after {max_tries} candidates")


def random_gap_probe(n_vertices: int, count: int, seed: int = 0, bc: str = DIRICHLET, k: int = 8,
                     level: int = 1, convex: bool = True) -> ProbeResult:
    """Minimum relative gap among the first ``k`` eigenvalues of random polygons.

    An empirical probe: deterministic under ``seed``.  Triangles are allowed
    but flagged, their generic simplicity being an open question.
    """
    bc = check_bc(bc)
    if n_vertices < 3:
        raise InvalidInput("polygons need at least 3 vertices")
    if count < 1:
        raise InvalidInput("count must be at least 1")
    flag = None
    if n_vertices == 3:
        flag = "triangles: generic simplicity is open; statistics reported without interpretation"
    rng = np.random.default_rng(seed)
    polys, gaps = [], []
    for _ in range(count):
        P = random_polygon(rng, n_vertices, convex)
        S = smallest_eigenpairs(assemble(fem_mesh(P, level), None, bc), k, seed=seed)
        gaps.append(min_gap(S, j_max=k - 1)[1])
        polys.append(P)
    g = np.array(gaps)
    edges = np.arange(-16.0, 2.0)
    counts, _ = np.histogram(np.log10(np.maximum(g, 1e-300)), bins=edges)
    return ProbeResult(n_vertices, bc, k, seed, g, polys, edges, counts, flag)


def scaling_path(P: Polygon, a: float, levels: Optional[int] = None) -> DeformationPath:
    """Uniform scaling about the origin by ``a`` on the structural mesh."""
    from .geometry import pl_family, triangulate_structural

    M = triangulate_structural(P)
    path = pl_family(P, Polygon(a * P.vertices), M)
    if levels is not None:
        path = path.refined(base_levels(M) + levels)
    return path
