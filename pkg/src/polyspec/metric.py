"""Constant-curvature metrics in the projective (Klein) model.

In polar coordinates the model metric of curvature ``kappa`` reads

    d rho^2 / (1 + kappa rho^2)^2  +  rho^2 d theta^2 / (1 + kappa rho^2)

and its geodesics are Euclidean segments.  With ``u = kappa |p|^2`` the
Cartesian components are ``G = I / (1 + u) - kappa p p^T / (1 + u)^2``: radial
eigenvalue ``1 / (1 + u)^2``, tangential eigenvalue ``1 / (1 + u)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, OutsideDomain, StepTooLarge


@dataclass(frozen=True)
class MetricSpec:
    """Curvature ``kappa`` and a constant conformal factor ``scale``.

    The metric ``scale * g_kappa`` has curvature ``kappa / scale``.
    """

    kappa: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.kappa):
            raise InvalidInput(f"kappa must be finite, got {self.kappa!r}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise InvalidInput(f"metric scale must be positive, got {self.scale!r}")

    @property
    def radius(self) -> float:
        """Radius of the admissible disc (``inf`` when kappa >= 0)."""
        return math.inf if self.kappa >= 0 else abs(self.kappa) ** -0.5

    @property
    def curvature(self) -> float:
        return self.kappa / self.scale

    def check_points(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        if self.kappa < 0:
            r2 = (p**2).sum(-1)
            # 1 + kappa r^2 > 0  <=>  r < R
            if np.any(1.0 + self.kappa * r2 <= 0):
                r = float(np.sqrt(r2.max()))
                raise OutsideDomain(
                    f"point at distance {r:.6g} from the origin is outside the "
                    f"admissible disc of radius {self.radius:.6g} (kappa={self.kappa})"
                )
        return p


def metric_tensor(spec: MetricSpec, p) -> np.ndarray:
    """Metric components at ``p``; shape ``(..., 2, 2)`` for points ``(..., 2)``."""
    p = spec.check_points(p)
    k = spec.kappa
    w = 1.0 + k * (p**2).sum(-1)
    eye = np.eye(2)
    G = eye / w[..., None, None] - k * p[..., :, None] * p[..., None, :] / (w**2)[..., None, None]
    return spec.scale * G


def metric_tensor_polar(spec: MetricSpec, p) -> np.ndarray:
    """Metric components built from the polar form via the radial frame.

    Independent route used to cross-check :func:`metric_tensor`; undefined at
    the origin, where the identity (times scale) is returned.
    """
    p = spec.check_points(p)
    rho = np.sqrt((p**2).sum(-1))
    w = 1.0 + spec.kappa * rho**2
    with np.errstate(invalid="ignore", divide="ignore"):
        er = np.where(rho[..., None] > 0, p / rho[..., None], np.array([1.0, 0.0]))
    et = np.stack([-er[..., 1], er[..., 0]], axis=-1)
    G = (er[..., :, None] * er[..., None, :]) / (w**2)[..., None, None] + (
        et[..., :, None] * et[..., None, :]
    ) / w[..., None, None]
    return spec.scale * G


def volume_density(spec: MetricSpec, p) -> np.ndarray:
    """Riemannian area density ``scale * (1 + kappa |p|^2)^(-3/2)``."""
    p = spec.check_points(p)
    w = 1.0 + spec.kappa * (p**2).sum(-1)
    return spec.scale * w**-1.5


def inverse_metric_density(spec: MetricSpec, p):
    """``(G^{-1} sqrt(det G), sqrt(det G))`` at ``p``.

    The stiffness coefficient ``G^{-1} sqrt(det G)`` simplifies to
    ``(I + kappa p p^T) / sqrt(1 + u)`` and does not depend on ``scale``.
    """
    p = spec.check_points(p)
    k = spec.kappa
    w = 1.0 + k * (p**2).sum(-1)
    A = (np.eye(2) + k * p[..., :, None] * p[..., None, :]) / np.sqrt(w)[..., None, None]
    return A, spec.scale * w**-1.5


def _brioschi(E, F, G, Eu, Ev, Fu, Fv, Gu, Gv, Evv, Fuv, Guu):
    A = np.array(
        [
            [-0.5 * Evv + Fuv - 0.5 * Guu, 0.5 * Eu, Fu - 0.5 * Ev],
            [Fv - 0.5 * Gu, E, F],
            [0.5 * Gv, F, G],
        ]
    )
    B = np.array([[0.0, 0.5 * Ev, 0.5 * Gu], [0.5 * Ev, E, F], [0.5 * Gu, F, G]])
    return (np.linalg.det(A) - np.linalg.det(B)) / (E * G - F * F) ** 2


def check_gaussian_curvature(spec: MetricSpec, p, h: float = 1e-3) -> float:
    """Finite-difference Gaussian curvature of the metric field at ``p``.

    Uses the Brioschi formula with central differences of step ``h``; the
    result should equal ``kappa / scale`` up to O(h^2).
    """
    if not (0 < h <= 0.1):
        raise StepTooLarge(f"step must lie in (0, 0.1], got {h!r}")
    x, y = (float(c) for c in p)
    if spec.kappa < 0 and math.hypot(x, y) + 2 * h >= spec.radius:
        raise OutsideDomain("finite-difference stencil leaves the admissible disc")

    def comp(dx, dy):
        G = metric_tensor(spec, np.array([x + dx * h, y + dy * h]))
        return G[0, 0], G[0, 1], G[1, 1]

    c = {(i, j): comp(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1)}
    E, F, G = c[0, 0]

    def d_u(k):
        return (c[1, 0][k] - c[-1, 0][k]) / (2 * h)

    def d_v(k):
        return (c[0, 1][k] - c[0, -1][k]) / (2 * h)

    Evv = (c[0, 1][0] - 2 * E + c[0, -1][0]) / h**2
    Guu = (c[1, 0][2] - 2 * G + c[-1, 0][2]) / h**2
    Fuv = (c[1, 1][1] - c[1, -1][1] - c[-1, 1][1] + c[-1, -1][1]) / (4 * h * h)
    return float(
        _brioschi(E, F, G, d_u(0), d_v(0), d_u(1), d_v(1), d_u(2), d_v(2), Evv, Fuv, Guu)
    )


def klein_rotation(angle: float):
    """Rotation about the origin, an isometry of every ``g_kappa``.

    Returns a function mapping arrays of points ``(..., 2)``; the matrix is
    available as its ``matrix`` attribute.
    """
    c, s = math.cos(angle), math.sin(angle)
    R = np.array([[c, -s], [s, c]])

    def rotate(points):
        return np.asarray(points, dtype=float) @ R.T

    rotate.matrix = R
    return rotate


def equivalence_bounds(kappas, points) -> tuple[float, float]:
    """Extreme eigenvalues of ``g_kappa`` over the given kappas and points.

    Witness for the uniform equivalence of the metrics on compact curvature
    intervals: every tensor eigenvalue lies in the returned ``[lo, hi]``.
    """
    lo, hi = math.inf, 0.0
    for k in kappas:
        ev = np.linalg.eigvalsh(metric_tensor(MetricSpec(k), points))
        lo = min(lo, float(ev.min()))
        hi = max(hi, float(ev.max()))
    return lo, hi
