import numpy as np
import pytest
import scipy.sparse as sp

from polyspec.assembly import assemble
from polyspec.eigensolve import dense_eigenpairs, smallest_eigenpairs
from polyspec.errors import DimensionTooSmall, NoConvergence
from polyspec.geometry import fem_mesh, rectangle, rectangle_mesh, validate_polygon


def small_forms(bc):
    return assemble(fem_mesh(validate_polygon([(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)]), 1), bc=bc)


@pytest.mark.parametrize("bc", ["dirichlet", "neumann"])
def test_against_dense(bc):
    F = small_forms(bc)
    assert F.dim <= 200
    ref, _ = dense_eigenpairs(F)
    S = smallest_eigenpairs(F, 8)
    np.testing.assert_allclose(S.eigenvalues, ref[:8], rtol=1e-10, atol=1e-10)
    assert np.all(S.residuals <= 1e-8)


def test_vectors_m_orthonormal():
    F = small_forms("dirichlet")
    S = smallest_eigenpairs(F, 6)
    X = S.eigenvectors
    np.testing.assert_allclose(X.T @ (F.M @ X), np.eye(6), atol=1e-10)


def test_exact_multiplicity_comes_out_in_pairs():
    S = smallest_eigenpairs(assemble(rectangle_mesh(1.0, 1.0, 2)), 6)
    lam = S.eigenvalues
    assert (lam[2] - lam[1]) / lam[1] < 1e-9


def test_deterministic():
    F = small_forms("neumann")
    a = smallest_eigenpairs(F, 5, seed=3)
    b = smallest_eigenpairs(F, 5, seed=3)
    assert a.eigenvalues.tobytes() == b.eigenvalues.tobytes()
    assert a.eigenvectors.tobytes() == b.eigenvectors.tobytes()


def test_seed_independent_values():
    F = small_forms("dirichlet")
    a = smallest_eigenpairs(F, 5, seed=1).eigenvalues
    b = smallest_eigenpairs(F, 5, seed=2).eigenvalues
    np.testing.assert_allclose(a, b, rtol=1e-11)


def test_diagonal_problem():
    d = np.arange(1.0, 51.0)
    S = smallest_eigenpairs((sp.diags(d[::-1]), sp.identity(50)), 4)
    np.testing.assert_allclose(S.eigenvalues, [1, 2, 3, 4], rtol=1e-12)


def test_dimension_checks():
    F = assemble(fem_mesh(rectangle(1.0, 1.0), 0))
    with pytest.raises(DimensionTooSmall):
        smallest_eigenpairs(F, F.dim)
    with pytest.raises(DimensionTooSmall):
        smallest_eigenpairs(F, 0)


def test_no_convergence_reports_residuals():
    F = small_forms("dirichlet")
    with pytest.raises(NoConvergence) as exc:
        smallest_eigenpairs(F, 6, max_iter=1, tol=1e-300)
    assert len(exc.value.residuals) == 6
