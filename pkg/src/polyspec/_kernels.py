"""Element-matrix kernels for P1 triangles.

Each kernel exists twice: a vectorized numpy version and a loop version
compiled with numba.  The numba path is used when numba imports and the
environment variable ``POLYSPEC_DISABLE_NUMBA`` is unset (or "0").  Both
return ``(Ke, Me)`` with shape ``(F, 3, 3)``.
"""
from __future__ import annotations

import os

import numpy as np

# 6-point symmetric rule, exact for degree 4 (weights normalized to sum 1)
_QA = 0.44594849091596488632
_QB = 0.091576213509770743460
_WA = 0.22338158967801146570
_WB = 0.10995174365532186764
QUAD_BARY = np.array(
    [
        [_QA, _QA, 1 - 2 * _QA],
        [_QA, 1 - 2 * _QA, _QA],
        [1 - 2 * _QA, _QA, _QA],
        [_QB, _QB, 1 - 2 * _QB],
        [_QB, 1 - 2 * _QB, _QB],
        [1 - 2 * _QB, _QB, _QB],
    ]
)
QUAD_W = np.array([_WA, _WA, _WA, _WB, _WB, _WB])

_MASS_REF = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


def _flag_disabled() -> bool:
    return os.environ.get("POLYSPEC_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")


try:  # pragma: no cover - exercised implicitly
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False


def backend() -> str:
    """Name of the active kernel backend: ``"numba"`` or ``"numpy"``."""
    return "numba" if HAVE_NUMBA and not _flag_disabled() else "numpy"


# ---------------------------------------------------------------------------
# numpy


def _gradients_np(P):
    """Areas and barycentric gradients for triangles ``P`` of shape (F, 3, 2)."""
    x0, x1, x2 = P[:, 0], P[:, 1], P[:, 2]
    u, v = x1 - x0, x2 - x0
    det = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
    B = np.empty_like(P)
    for i in range(3):
        e = P[:, (i + 2) % 3] - P[:, (i + 1) % 3]
        B[:, i, 0] = -e[:, 1] / det
        B[:, i, 1] = e[:, 0] / det
    return 0.5 * det, B


def p1_flat_np(points, tris):
    area, B = _gradients_np(points[tris])
    Ke = area[:, None, None] * np.einsum("fik,fjk->fij", B, B)
    Me = area[:, None, None] * _MASS_REF
    return Ke, Me


def p1_metric_np(points, tris, kappa, scale):
    P = points[tris]
    area, B = _gradients_np(P)
    xq = np.einsum("qi,fik->fqk", QUAD_BARY, P)
    w = 1.0 + kappa * (xq**2).sum(-1)
    A = (np.eye(2) + kappa * xq[..., :, None] * xq[..., None, :]) / np.sqrt(w)[..., None, None]
    rho = scale * w**-1.5
    Abar = np.einsum("q,fqkl->fkl", QUAD_W, A)
    Ke = area[:, None, None] * np.einsum("fik,fkl,fjl->fij", B, Abar, B)
    mq = np.einsum("q,fq,qi,qj->fij", QUAD_W, rho, QUAD_BARY, QUAD_BARY)
    Me = area[:, None, None] * mq
    return Ke, Me


def p1_pullback_np(src, dst, tris):
    P, Q = src[tris], dst[tris]
    area, B = _gradients_np(P)
    E = np.stack([P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]], axis=2)
    D = np.stack([Q[:, 1] - Q[:, 0], Q[:, 2] - Q[:, 0]], axis=2)
    J = D @ np.linalg.inv(E)
    h = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    Jinv = np.linalg.inv(J)
    C = B @ Jinv  # rows: J^{-T} grad
    w = area * h
    Ke = w[:, None, None] * np.einsum("fik,fjk->fij", C, C)
    Me = w[:, None, None] * _MASS_REF
    return Ke, Me


# ---------------------------------------------------------------------------
# numba

if HAVE_NUMBA:

    @numba.njit(cache=True)
    def _grad_nb(P, B):
        x0, y0 = P[0, 0], P[0, 1]
        det = (P[1, 0] - x0) * (P[2, 1] - y0) - (P[1, 1] - y0) * (P[2, 0] - x0)
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            B[i, 0] = -(P[k, 1] - P[j, 1]) / det
            B[i, 1] = (P[k, 0] - P[j, 0]) / det
        return 0.5 * det

    @numba.njit(cache=True)
    def p1_flat_nb(points, tris):
        F = tris.shape[0]
        Ke = np.empty((F, 3, 3))
        Me = np.empty((F, 3, 3))
        P = np.empty((3, 2))
        B = np.empty((3, 2))
        for f in range(F):
            for i in range(3):
                P[i, 0] = points[tris[f, i], 0]
                P[i, 1] = points[tris[f, i], 1]
            a = _grad_nb(P, B)
            for i in range(3):
                for j in range(3):
                    Ke[f, i, j] = a * (B[i, 0] * B[j, 0] + B[i, 1] * B[j, 1])
                    Me[f, i, j] = a * (2.0 if i == j else 1.0) / 12.0
        return Ke, Me

    @numba.njit(cache=True)
    def p1_metric_nb(points, tris, kappa, scale, qbary, qw):
        F = tris.shape[0]
        nq = qw.shape[0]
        Ke = np.empty((F, 3, 3))
        Me = np.empty((F, 3, 3))
        P = np.empty((3, 2))
        B = np.empty((3, 2))
        for f in range(F):
            for i in range(3):
                P[i, 0] = points[tris[f, i], 0]
                P[i, 1] = points[tris[f, i], 1]
            a = _grad_nb(P, B)
            a00 = 0.0
            a01 = 0.0
            a11 = 0.0
            m = np.zeros((3, 3))
            for q in range(nq):
                x = qbary[q, 0] * P[0, 0] + qbary[q, 1] * P[1, 0] + qbary[q, 2] * P[2, 0]
                y = qbary[q, 0] * P[0, 1] + qbary[q, 1] * P[1, 1] + qbary[q, 2] * P[2, 1]
                w = 1.0 + kappa * (x * x + y * y)
                s = 1.0 / np.sqrt(w)
                a00 += qw[q] * (1.0 + kappa * x * x) * s
                a01 += qw[q] * (kappa * x * y) * s
                a11 += qw[q] * (1.0 + kappa * y * y) * s
                rho = scale * w**-1.5
                for i in range(3):
                    for j in range(3):
                        m[i, j] += qw[q] * rho * qbary[q, i] * qbary[q, j]
            for i in range(3):
                c0 = a00 * B[i, 0] + a01 * B[i, 1]
                c1 = a01 * B[i, 0] + a11 * B[i, 1]
                for j in range(3):
                    Ke[f, i, j] = a * (c0 * B[j, 0] + c1 * B[j, 1])
                    Me[f, i, j] = a * m[i, j]
        return Ke, Me

    @numba.njit(cache=True)
    def p1_pullback_nb(src, dst, tris):
        F = tris.shape[0]
        Ke = np.empty((F, 3, 3))
        Me = np.empty((F, 3, 3))
        P = np.empty((3, 2))
        B = np.empty((3, 2))
        C = np.empty((3, 2))
        for f in range(F):
            for i in range(3):
                P[i, 0] = src[tris[f, i], 0]
                P[i, 1] = src[tris[f, i], 1]
            a = _grad_nb(P, B)
            e00 = P[1, 0] - P[0, 0]
            e10 = P[1, 1] - P[0, 1]
            e01 = P[2, 0] - P[0, 0]
            e11 = P[2, 1] - P[0, 1]
            d00 = dst[tris[f, 1], 0] - dst[tris[f, 0], 0]
            d10 = dst[tris[f, 1], 1] - dst[tris[f, 0], 1]
            d01 = dst[tris[f, 2], 0] - dst[tris[f, 0], 0]
            d11 = dst[tris[f, 2], 1] - dst[tris[f, 0], 1]
            de = e00 * e11 - e01 * e10
            # J = D E^{-1}
            i00, i01, i10, i11 = e11 / de, -e01 / de, -e10 / de, e00 / de
            j00 = d00 * i00 + d01 * i10
            j01 = d00 * i01 + d01 * i11
            j10 = d10 * i00 + d11 * i10
            j11 = d10 * i01 + d11 * i11
            h = j00 * j11 - j01 * j10
            k00, k01, k10, k11 = j11 / h, -j01 / h, -j10 / h, j00 / h
            for i in range(3):
                C[i, 0] = B[i, 0] * k00 + B[i, 1] * k10
                C[i, 1] = B[i, 0] * k01 + B[i, 1] * k11
            w = a * h
            for i in range(3):
                for j in range(3):
                    Ke[f, i, j] = w * (C[i, 0] * C[j, 0] + C[i, 1] * C[j, 1])
                    Me[f, i, j] = w * (2.0 if i == j else 1.0) / 12.0
        return Ke, Me


# ---------------------------------------------------------------------------
# dispatch


def p1_flat(points, tris):
    points = np.ascontiguousarray(points, dtype=np.float64)
    tris = np.ascontiguousarray(tris, dtype=np.int64)
    if backend() == "numba":
        return p1_flat_nb(points, tris)
    return p1_flat_np(points, tris)


def p1_metric(points, tris, kappa, scale):
    points = np.ascontiguousarray(points, dtype=np.float64)
    tris = np.ascontiguousarray(tris, dtype=np.int64)
    if backend() == "numba":
        return p1_metric_nb(points, tris, float(kappa), float(scale), QUAD_BARY, QUAD_W)
    return p1_metric_np(points, tris, float(kappa), float(scale))


def p1_pullback(src, dst, tris):
    src = np.ascontiguousarray(src, dtype=np.float64)
    dst = np.ascontiguousarray(dst, dtype=np.float64)
    tris = np.ascontiguousarray(tris, dtype=np.int64)
    if backend() == "numba":
        return p1_pullback_nb(src, dst, tris)
    return p1_pullback_np(src, dst, tris)
