"""``polyspec`` command line.

Exit codes: 0 success, 1 failed validation, 2 invalid input, 3 numerical
failure.  Output files depend only on the arguments, so repeating a command
reproduces its files byte for byte.
"""
from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .assembly import assemble, check_bc
from .deform import locate_degeneracy, random_gap_probe, sweep_kappa, sweep_t
from .eigensolve import smallest_eigenpairs
from .errors import InvalidInput, PolyspecError
from .geometry import (
    base_levels,
    delete_vertex_path,
    fem_mesh,
    pl_family,
    rectangle_width_path,
    triangulate_structural,
)
from .io import dumps, mesh_json, read_polygon, spectrum_csv
from .metric import MetricSpec


@dataclass
class JobConfig:
    command: str
    polygon: Optional[str] = None
    bc: str = "dirichlet"
    k: int = 10
    kappa: float = 0.0
    metric_scale: float = 1.0
    refine: int = 3
    samples: int = 11
    seed: int = 0
    out: Optional[str] = None
    format: str = "csv"
    extra: dict = field(default_factory=dict)

    def validate(self) -> "JobConfig":
        check_bc(self.bc)
        if self.k < 1:
            raise InvalidInput(f"k must be at least 1, got {self.k}")
        if self.refine < 0:
            raise InvalidInput(f"refine must be non-negative, got {self.refine}")
        if self.samples < 2:
            raise InvalidInput(f"samples must be at least 2, got {self.samples}")
        if not self.metric_scale > 0:
            raise InvalidInput(f"metric_scale must be positive, got {self.metric_scale}")
        if self.format not in ("csv", "json"):
            raise InvalidInput(f"format must be csv or json, got {self.format!r}")
        return self


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _need_polygon(cfg):
    if cfg.polygon is None:
        raise InvalidInput("--polygon is required for this command")
    return read_polygon(cfg.polygon)


def cmd_spectrum(cfg: JobConfig) -> int:
    P = _need_polygon(cfg)
    mesh = fem_mesh(P, cfg.refine)
    F = assemble(mesh, MetricSpec(cfg.kappa, cfg.metric_scale), cfg.bc)
    S = smallest_eigenpairs(F, cfg.k, seed=cfg.seed)
    stats = {
        "points": mesh.n_points,
        "triangles": mesh.n_triangles,
        "dofs": F.dim,
        "max_edge": mesh.max_edge(),
        "min_angle_deg": mesh.min_angle(),
    }
    if cfg.format == "json":
        doc = {"bc": cfg.bc, "kappa": cfg.kappa, "metric_scale": cfg.metric_scale,
               "refine": cfg.refine, "mesh": stats, **S.to_json()}
        doc.pop("meta")
        _emit(dumps(doc), cfg.out)
    else:
        _emit(spectrum_csv(S), cfg.out)
    print(f"mesh: {stats['points']} points, {stats['triangles']} triangles, {stats['dofs']} dofs",
          file=sys.stderr)
    return 0


def _gap_report(D) -> dict:
    i = int(np.argmin(D.gaps))
    return {
        "parameter": D.parameter_name,
        "matching": D.matching_method,
        "samples": D.samples,
        "min_gap_per_sample": D.gaps,
        "min_gap": {"index": i, "param": D.samples[i], "gap": D.gaps[i]},
        "max_relative_jump": D.max_relative_jump(),
        "flags": [list(f) for f in D.flags],
        "notes": list(D.notes),
    }


def cmd_sweep(cfg: JobConfig) -> int:
    x = cfg.extra
    modes = [m for m in ("target", "kappa_range", "rect_width") if x.get(m) is not None]
    if len(modes) != 1:
        raise InvalidInput("give exactly one of --target, --kappa-range, --rect-width")
    if cfg.out is None:
        raise InvalidInput("--out is required for sweep (a .gaps.json report is written next to it)")
    mode = modes[0]
    if mode == "kappa_range":
        a, b = x["kappa_range"]
        kappas = np.linspace(a, b, cfg.samples)
        D = sweep_kappa(_need_polygon(cfg), cfg.bc, cfg.k, kappas, level=cfg.refine, seed=cfg.seed,
                        metric_scale=cfg.metric_scale)
    elif mode == "rect_width":
        s0, s1 = x["rect_width"]
        if s0 == s1:
            raise InvalidInput("--rect-width needs two different widths")
        path = rectangle_width_path(x["s1"], s0, s1, level=cfg.refine)
        D = sweep_t(path, cfg.bc, cfg.k, cfg.samples, seed=cfg.seed)
        D = D.reparametrized("s", lambda t: s0 + (s1 - s0) * t)
    else:
        P = _need_polygon(cfg)
        Q = read_polygon(x["target"])
        path = pl_family(P, Q, triangulate_structural(P))
        D = sweep_t(path, cfg.bc, cfg.k, cfg.samples, refine=base_levels(path.source) + cfg.refine,
                    seed=cfg.seed)
    out = Path(cfg.out)
    out.write_text(D.to_csv())
    out.with_suffix(".gaps.json").write_text(dumps(_gap_report(D)))
    return 0


def cmd_locate(cfg: JobConfig) -> int:
    x = cfg.extra
    j, bracket = x["j"], x["bracket"]
    if x.get("rect_width") is not None:
        s0, s1 = x["rect_width"]
        source = rectangle_width_path(x["s1"], s0, s1, level=cfg.refine)
        rep = locate_degeneracy(source, j, bracket, x["tol"], bc=cfg.bc, k=j + 2, seed=cfg.seed)
    else:
        # parameter is kappa on the given polygon
        rep = locate_degeneracy(_need_polygon(cfg), j, bracket, x["tol"], bc=cfg.bc, k=j + 2,
                                level=cfg.refine, seed=cfg.seed, metric_scale=cfg.metric_scale)
    _emit(dumps(rep.to_json()), cfg.out)
    return 0


def cmd_delete_vertex(cfg: JobConfig) -> int:
    P = _need_polygon(cfg)
    path, end = delete_vertex_path(P)
    moved = int(np.flatnonzero(np.any(end.vertices != P.vertices, axis=1))[0])
    doc = {
        "moved_vertex": moved,
        "endpoint": end.to_json(),
        "min_orientation": float(path.min_orientation().min()),
        "bilipschitz_constant": path.bilipschitz_constant(),
    }
    _emit(dumps(doc), cfg.out)
    return 0


def cmd_probe(cfg: JobConfig) -> int:
    x = cfg.extra
    res = random_gap_probe(x["n_vertices"], x["count"], seed=cfg.seed, bc=cfg.bc, k=cfg.k,
                           level=cfg.refine, convex=not x["general"])
    _emit(dumps(res.to_json()), cfg.out)
    return 0


def cmd_mesh(cfg: JobConfig) -> int:
    _emit(mesh_json(fem_mesh(_need_polygon(cfg), cfg.refine)), cfg.out)
    return 0


def cmd_validate(cfg: JobConfig) -> int:
    from .validation import SUITES, run_suite

    suite = cfg.extra["suite"]
    if suite not in SUITES:
        raise InvalidInput(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    return 0 if run_suite(suite) else 1


COMMANDS = {
    "spectrum": cmd_spectrum,
    "sweep": cmd_sweep,
    "locate": cmd_locate,
    "delete-vertex": cmd_delete_vertex,
    "probe": cmd_probe,
    "mesh": cmd_mesh,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--polygon", help='polygon JSON file {"vertices": [[x, y], ...]}')
    common.add_argument("--bc", default="dirichlet", choices=["dirichlet", "neumann"])
    common.add_argument("--k", type=int, default=10, help="number of eigenvalues (default 10)")
    common.add_argument("--kappa", type=float, default=0.0, help="curvature of the Klein metric")
    common.add_argument("--metric-scale", type=float, default=1.0)
    common.add_argument("--refine", type=int, default=3, help="mesh refinement level (default 3)")
    common.add_argument("--samples", type=int, default=11)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", default="csv", choices=["csv", "json"])

    ap = argparse.ArgumentParser(prog="polyspec", description="Laplace spectra of polygons.")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="smallest eigenvalues of one polygon")

    sw = sub.add_parser("sweep", parents=[common], help="eigenvalue branches along a family")
    sw.add_argument("--target", help="target polygon JSON (piecewise-linear path from --polygon)")
    sw.add_argument("--kappa-range", type=float, nargs=2, metavar=("A", "B"))
    sw.add_argument("--rect-width", type=float, nargs=2, metavar=("S0", "S1"),
                    help="rectangle [0, s1] x [0, s] with s from S0 to S1")
    sw.add_argument("--s1", type=float, default=1.0)

    lo = sub.add_parser("locate", parents=[common], help="minimize the gap lambda_{j+1} - lambda_j")
    lo.add_argument("--j", type=int, required=True)
    lo.add_argument("--bracket", type=float, nargs=2, required=True, metavar=("A", "B"))
    lo.add_argument("--tol", type=float, default=1e-6)
    lo.add_argument("--rect-width", type=float, nargs=2, metavar=("S0", "S1"))
    lo.add_argument("--s1", type=float, default=1.0)

    sub.add_parser("delete-vertex", parents=[common], help="vertex-deletion path of a polygon")

    pr = sub.add_parser("probe", parents=[common], help="gap statistics of random polygons")
    pr.add_argument("--n-vertices", type=int, default=4)
    pr.add_argument("--count", type=int, default=50)
    pr.add_argument("--general", action="store_true", help="sample simple, not only convex, polygons")

    sub.add_parser("mesh", parents=[common], help="export the FEM mesh as JSON")

    va = sub.add_parser("validate", help="run an acceptance suite")
    va.add_argument("suite")
    return ap


_BASE_FIELDS = ("polygon", "bc", "k", "kappa", "metric_scale", "refine", "samples", "seed", "out", "format")


def config_from_args(ns: argparse.Namespace) -> JobConfig:
    d = vars(ns).copy()
    cmd = d.pop("command")
    base = {f: d.pop(f) for f in _BASE_FIELDS if f in d}
    cfg = JobConfig(command=cmd, **base, extra=d)
    return cfg if cmd == "validate" else cfg.validate()


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[cfg.command](cfg)
    except PolyspecError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
