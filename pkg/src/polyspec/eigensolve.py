"""Smallest eigenpairs of sparse generalized problems ``K u = lambda M u``.

Block shift-and-invert subspace iteration: a sparse LU factorization of
``K + sigma M`` is applied to a block of ``p >= k + 3`` vectors, followed by a
Rayleigh-Ritz projection every step.  Working on a block makes clusters and
exact multiplicities come out together rather than one copy at a time.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DimensionTooSmall, NoConvergence

#: Shift used for the factorization; keeps K + sigma M definite for Neumann.
SHIFT = 1.0

#: Residual target reached before returning (the contract is 1e-8).
DEFAULT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Ascending eigenvalues with M-orthonormal eigenvectors and residuals."""

    eigenvalues: np.ndarray
    residuals: np.ndarray
    eigenvectors: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return len(self.eigenvalues)

    def to_json(self) -> dict:
        return {
            "eigenvalues": self.eigenvalues.tolist(),
            "residuals": self.residuals.tolist(),
            "meta": self.meta,
        }


def relative_residuals(K, M, lam, X) -> np.ndarray:
    """``||K x - lam M x||`` relative to ``||K x||`` (``||M x||`` near zero)."""
    KX = K @ X
    MX = M @ X
    R = KX - MX * lam
    nr = np.linalg.norm(R, axis=0)
    nk = np.linalg.norm(KX, axis=0)
    nm = np.linalg.norm(MX, axis=0)
    ref = max(float(np.max(np.abs(lam))), 1e-300)
    small = np.abs(lam) <= 1e-8 * ref
    return nr / np.where(small, nm, np.maximum(nk, 1e-300))


def _m_orthonormalize(Y, M):
    G = Y.T @ (M @ Y)
    G = 0.5 * (G + G.T)
    s, V = np.linalg.eigh(G)
    keep = s > s.max() * 1e-13
    return Y @ (V[:, keep] / np.sqrt(s[keep]))


def smallest_eigenpairs(F, k: int, seed: int = 0, tol: float = DEFAULT_TOL, max_iter: int = 1000,
                        block: Optional[int] = None) -> Spectrum:
    """The ``k`` smallest eigenpairs of ``(F.K, F.M)``.

    ``F`` is a :class:`~polyspec.assembly.FormPair` or any object with ``K``
    and ``M`` sparse attributes (a ``(K, M)`` tuple is accepted too).

    Raises
    ------
    DimensionTooSmall
        If ``k < 1`` or ``k >= dim``.
    NoConvergence
        If the residual target is not met within ``max_iter`` steps.
    """
    if isinstance(F, tuple):
        K, M = F
        meta = {}
    else:
        K, M = F.K, F.M
        meta = dict(getattr(F, "meta", {}))
        if hasattr(F, "bc"):
            meta["bc"] = F.bc
    K = sp.csc_matrix(K)
    M = sp.csc_matrix(M)
    n = K.shape[0]
    if k < 1 or k >= n:
        raise DimensionTooSmall(f"need 1 <= k < dim, got k={k}, dim={n}")
    p = min(n, block or max(k + 8, 2 * k))
    p = max(p, min(n, k + 3))
    lu = spla.splu((K + SHIFT * M).tocsc())
    rng = np.random.default_rng(seed)
    X = _m_orthonormalize(rng.standard_normal((n, p)), M)
    res = np.full(k, np.inf)
    for _ in range(max_iter):
        Y = lu.solve(np.asfortranarray(M @ X))
        Z = _m_orthonormalize(Y, M)
        H = Z.T @ (K @ Z)
        theta, C = sla.eigh(0.5 * (H + H.T))
        X = Z @ C
        res = relative_residuals(K, M, theta[:k], X[:, :k])
        if X.shape[1] < k:
            raise NoConvergence(list(res), "search space collapsed")
        if np.all(res <= tol) or X.shape[1] == n:
            break
        if X.shape[1] < p:
            # refill after rank loss
            extra = rng.standard_normal((n, p - X.shape[1]))
            X = _m_orthonormalize(np.hstack([X, extra]), M)
    else:
        raise NoConvergence(list(res))
    lam = theta[:k]
    vec = X[:, :k]
    # fix eigenvector signs for reproducibility
    idx = np.argmax(np.abs(vec), axis=0)
    vec = vec * np.sign(vec[idx, np.arange(k)])
    meta["dim"] = n
    return Spectrum(np.array(lam), np.array(res), vec, meta)


def dense_eigenpairs(F) -> tuple[np.ndarray, np.ndarray]:
    """Full spectrum by dense generalized ``eigh`` (reference for small problems)."""
    K, M = (F if isinstance(F, tuple) else (F.K, F.M))
    K = K.toarray() if sp.issparse(K) else np.asarray(K)
    M = M.toarray() if sp.issparse(M) else np.asarray(M)
    return sla.eigh(K, M)
