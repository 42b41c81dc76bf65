"""P1 finite element discretization of the Dirichlet energy and L2 product.

``assemble`` discretizes ``q(u) = int |grad_g u|_g^2 dv_g`` directly on a mesh
for a Klein-model metric ``g``; ``assemble_pullback`` discretizes the
pulled-back form ``int |(Df_t)^{-T} grad u|^2 det(Df_t) dx`` on the source mesh
of a deformation path.  Because a PL map carries P1 functions to P1
functions, both routes give the same discrete spectrum on ``f_t(M)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .errors import DegenerateTriangle, InvalidInput
from .geometry import DeformationPath, TriMesh
from .metric import MetricSpec

DIRICHLET = "dirichlet"
NEUMANN = "neumann"


def check_bc(bc: str) -> str:
    b = str(bc).lower()
    if b not in (DIRICHLET, NEUMANN):
        raise InvalidInput(f"boundary condition must be 'dirichlet' or 'neumann', got {bc!r}")
    return b


@dataclass(frozen=True, eq=False)
class FormPair:
    """Stiffness ``K`` and mass ``M`` in CSR format on the free DOFs.

    ``dof_map[i]`` is the mesh point carrying degree of freedom ``i``.
    """

    K: sp.csr_matrix
    M: sp.csr_matrix
    dof_map: np.ndarray
    bc: str
    n_points: int
    meta: dict

    @property
    def dim(self) -> int:
        return self.K.shape[0]

    def expand(self, u: np.ndarray) -> np.ndarray:
        """Lift DOF vectors to mesh-point vectors (zero on Dirichlet boundary)."""
        u = np.asarray(u)
        out = np.zeros((self.n_points,) + u.shape[1:], dtype=u.dtype)
        out[self.dof_map] = u
        return out


def _assemble_global(Ke, Me, tris, n_points, boundary, bc, meta) -> FormPair:
    Ke = 0.5 * (Ke + np.swapaxes(Ke, 1, 2))
    Me = 0.5 * (Me + np.swapaxes(Me, 1, 2))
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    shape = (n_points, n_points)
    K = sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=shape).tocsr()
    M = sp.coo_matrix((Me.ravel(), (rows, cols)), shape=shape).tocsr()
    bc = check_bc(bc)
    if bc == DIRICHLET:
        dofs = np.flatnonzero(~boundary)
        K = K[dofs][:, dofs]
        M = M[dofs][:, dofs]
    else:
        dofs = np.arange(n_points)
    K.sort_indices()
    M.sort_indices()
    return FormPair(K.tocsr(), M.tocsr(), dofs, bc, n_points, meta)


def _check_triangles(areas) -> None:
    bad = np.flatnonzero(~(areas > 0))
    if len(bad):
        raise DegenerateTriangle(f"triangle {int(bad[0])} has non-positive area {areas[bad[0]]!r}")


def assemble(mesh: TriMesh, spec: Union[MetricSpec, None] = None, bc: str = DIRICHLET) -> FormPair:
    """Stiffness and mass matrices of ``mesh`` under the metric ``spec``.

    Flat metrics use closed-form P1 element matrices; curved ones use the
    6-point degree-4 rule for both forms.

    Raises
    ------
    OutsideDomain, DegenerateTriangle
    """
    spec = spec or MetricSpec()
    spec.check_points(mesh.points)
    _check_triangles(mesh.areas())
    if spec.kappa == 0.0:
        Ke, Me = _kernels.p1_flat(mesh.points, mesh.triangles)
        if spec.scale != 1.0:
            Me = spec.scale * Me
    else:
        Ke, Me = _kernels.p1_metric(mesh.points, mesh.triangles, spec.kappa, spec.scale)
    meta = {"kappa": spec.kappa, "metric_scale": spec.scale, "level": mesh.level}
    return _assemble_global(Ke, Me, mesh.triangles, mesh.n_points, mesh.boundary, bc, meta)


def assemble_pullback(path: DeformationPath, t: float, bc: str = DIRICHLET) -> FormPair:
    """Pulled-back forms of ``f_t`` assembled on the source mesh (flat target).

    Per triangle ``J = D f_t`` is constant; gradients are transformed by
    ``J^{-T}`` and both forms carry the density ``det J``.
    """
    dst = path.positions(t)
    src = path.source
    _check_triangles(src.areas())
    c = path.orientation_coefficients()
    dets = c[:, 0] + t * c[:, 1] + t * t * c[:, 2]
    _check_triangles(dets)
    Ke, Me = _kernels.p1_pullback(src.points, dst, src.triangles)
    meta = {"kappa": 0.0, "metric_scale": 1.0, "level": src.level, "t": float(t)}
    return _assemble_global(Ke, Me, src.triangles, src.n_points, src.boundary, bc, meta)


def rescale_metric(F: FormPair, c: float) -> FormPair:
    """Forms of the metric scaled by ``c``: ``(K, c M)`` in two dimensions."""
    if not c > 0:
        raise InvalidInput(f"rescaling constant must be positive, got {c!r}")
    meta = dict(F.meta)
    meta["metric_scale"] = meta.get("metric_scale", 1.0) * c
    return FormPair(F.K, (c * F.M).tocsr(), F.dof_map, F.bc, F.n_points, meta)


def to_coo_text(A: sp.spmatrix) -> str:
    """Coordinate listing ``row col value`` sorted by (row, col), 17 digits."""
    C = sp.coo_matrix(A)
    order = np.lexsort((C.col, C.row))
    return "".join(
        f"{r} {c} {v:.17g}\n" for r, c, v in zip(C.row[order], C.col[order], C.data[order])
    )
