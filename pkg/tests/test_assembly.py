import numpy as np
import pytest
import scipy.sparse as sp

from polyspec.assembly import assemble, assemble_pullback, rescale_metric, to_coo_text
from polyspec.errors import InvalidInput
from polyspec.geometry import (
    fem_mesh,
    map_mesh,
    pl_family,
    rectangle,
    translate,
    triangulate_structural,
    validate_polygon,
)
from polyspec.metric import MetricSpec, metric_tensor, volume_density


def collapsed_gauss(order):
    """Nearly exact quadrature on the reference triangle (Duffy map of a Gauss square rule)."""
    x, w = np.polynomial.legendre.leggauss(order)
    x = 0.5 * (x + 1)
    w = 0.5 * w
    u, v = np.meshgrid(x, x, indexing="ij")
    wu, wv = np.meshgrid(w, w, indexing="ij")
    xi = u.ravel()
    eta = (v * (1 - u)).ravel()
    ww = (wu * wv * (1 - u)).ravel()
    return xi, eta, ww


def slow_metric_matrices(mesh, spec, order=12):
    xi, eta, ww = collapsed_gauss(order)
    n = mesh.n_points
    K = np.zeros((n, n))
    M = np.zeros((n, n))
    for tri in mesh.triangles:
        a, b, c = mesh.points[tri]
        J = np.column_stack([b - a, c - a])
        detJ = np.linalg.det(J)
        grads = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]) @ np.linalg.inv(J)
        for s, t, w in zip(xi, eta, ww):
            phi = np.array([1 - s - t, s, t])
            p = a + J @ [s, t]
            G = metric_tensor(spec, p)
            rho = volume_density(spec, p)
            A = np.linalg.inv(G) * rho
            wt = w * detJ
            K[np.ix_(tri, tri)] += wt * grads @ A @ grads.T
            M[np.ix_(tri, tri)] += wt * rho * np.outer(phi, phi)
    return K, M


def test_flat_square_row_sums():
    F = assemble(fem_mesh(rectangle(1.0, 1.0), 1), bc="neumann")
    np.testing.assert_allclose(F.K @ np.ones(F.dim), 0.0, atol=1e-12)
    assert F.M.sum() == pytest.approx(1.0, rel=1e-14)


def test_symmetric():
    F = assemble(fem_mesh(validate_polygon([(0, 0), (2, 0), (1, 1.5)]), 2), MetricSpec(0.3))
    assert abs(F.K - F.K.T).max() == 0.0
    assert abs(F.M - F.M.T).max() == 0.0


@pytest.mark.parametrize("kappa,scale", [(1.0, 1.0), (-0.8, 2.0)])
def test_metric_assembly_against_slow_oracle(kappa, scale):
    mesh = fem_mesh(translate(rectangle(1.0, 1.0), (-0.5, -0.5)), 0)
    spec = MetricSpec(kappa, scale)
    F = assemble(mesh, spec, bc="neumann")
    K, M = slow_metric_matrices(mesh, spec)
    # the production rule is degree 4; the oracle is near exact
    np.testing.assert_allclose(F.K.toarray(), K, rtol=0, atol=1e-6 * abs(K).max())
    np.testing.assert_allclose(F.M.toarray(), M, rtol=0, atol=2e-4 * abs(M).max())


def test_slow_oracle_converges_to_production_on_fine_mesh():
    # quadrature error shrinks with h while both discretize the same form
    spec = MetricSpec(1.0)
    errs = []
    for lv in (0, 1):
        mesh = fem_mesh(translate(rectangle(1.0, 1.0), (-0.5, -0.5)), lv)
        F = assemble(mesh, spec, bc="neumann")
        K, _ = slow_metric_matrices(mesh, spec, order=8)
        errs.append(abs(F.K.toarray() - K).max() / abs(K).max())
    assert errs[1] < errs[0] / 8


def test_dirichlet_removes_boundary():
    mesh = fem_mesh(rectangle(1.0, 1.0), 1)
    F = assemble(mesh)
    assert F.dim == int((~mesh.boundary).sum())
    u = F.expand(np.ones(F.dim))
    assert np.all(u[mesh.boundary] == 0)


def test_pullback_matches_direct():
    P = validate_polygon([(0, 0), (1, 0), (1, 1), (0, 1)])
    Q = validate_polygon([(0, 0), (1.5, -0.2), (1.2, 1.1), (0.1, 0.8)])
    path = pl_family(P, Q, triangulate_structural(P)).refined(3)
    for t in (0.0, 0.3, 1.0):
        A = assemble_pullback(path, t)
        B = assemble(map_mesh(path, t))
        assert abs(A.K - B.K).max() <= 1e-13 * abs(B.K).max()
        assert abs(A.M - B.M).max() <= 1e-15 * abs(B.M).max()


def test_flat_scale_multiplies_mass():
    mesh = fem_mesh(rectangle(1.0, 1.0), 1)
    F1 = assemble(mesh)
    F3 = assemble(mesh, MetricSpec(0.0, 3.0))
    assert abs(F3.M - 3 * F1.M).max() < 1e-16
    G = rescale_metric(F1, 3.0)
    assert abs(G.M - F3.M).max() < 1e-16


def test_bad_bc():
    with pytest.raises(InvalidInput):
        assemble(fem_mesh(rectangle(1.0, 1.0), 0), bc="robin")


def test_coo_text_sorted():
    A = sp.csr_matrix(np.array([[2.0, 0.0], [1.0 / 3.0, 0.0]]))
    assert to_coo_text(A).splitlines() == ["0 0 2", "1 0 0.33333333333333331"]
