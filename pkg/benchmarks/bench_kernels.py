"""Time the element kernels: numba against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--levels 3 4 5] [--repeat 5]
"""
import argparse
import time

import numpy as np

from polyspec import _kernels as kn
from polyspec.geometry import rectangle_mesh


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--levels", type=int, nargs="+", default=[3, 4, 5])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not kn.HAVE_NUMBA:
        raise SystemExit("numba not installed")

    print(f"{'kernel':10s} {'level':>5s} {'triangles':>9s} {'numpy ms':>9s} {'numba ms':>9s} {'speedup':>7s}")
    for lv in args.levels:
        m = rectangle_mesh(1.0, 1.0, lv)
        pts = m.points - 0.5
        tris = m.triangles
        dst = pts * [1.1, 0.9]
        cases = {
            "flat": (lambda: kn.p1_flat_np(pts, tris), lambda: kn.p1_flat_nb(pts, tris)),
            "metric": (
                lambda: kn.p1_metric_np(pts, tris, -0.5, 1.0),
                lambda: kn.p1_metric_nb(pts, tris, -0.5, 1.0, kn.QUAD_BARY, kn.QUAD_W),
            ),
            "pullback": (lambda: kn.p1_pullback_np(pts, dst, tris), lambda: kn.p1_pullback_nb(pts, dst, tris)),
        }
        for name, (f_np, f_nb) in cases.items():
            f_nb()  # compile
            a, b = f_np(), f_nb()
            assert np.allclose(a[0], b[0], rtol=1e-12, atol=1e-12)
            t_np = best_of(f_np, args.repeat)
            t_nb = best_of(f_nb, args.repeat)
            print(f"{name:10s} {lv:5d} {len(tris):9d} {1e3 * t_np:9.2f} {1e3 * t_nb:9.2f} {t_np / t_nb:7.1f}")


if __name__ == "__main__":
    main()
