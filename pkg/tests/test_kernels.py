import numpy as np
import pytest

from polyspec import _kernels as kn
from polyspec.geometry import fem_mesh, rectangle, translate

REF_K = np.array([[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]])
REF_M = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 24.0
UNIT = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
TRI = np.array([[0, 1, 2]])


def test_quadrature_rule():
    assert kn.QUAD_W.sum() == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(kn.QUAD_BARY.sum(axis=1), 1.0, atol=1e-15)
    # exact for a degree-4 monomial: int_T x^4 = 2 * 4! / 6! * area... over the unit triangle = 1/30
    x = kn.QUAD_BARY[:, 1]
    assert 0.5 * np.dot(kn.QUAD_W, x**4) == pytest.approx(1.0 / 30.0, rel=1e-13)


@pytest.mark.parametrize("fn", [kn.p1_flat_np, lambda p, t: kn.p1_metric_np(p, t, 0.0, 1.0)])
def test_reference_triangle(fn):
    Ke, Me = fn(UNIT, TRI)
    np.testing.assert_allclose(Ke[0], REF_K, atol=1e-15)
    np.testing.assert_allclose(Me[0], REF_M, atol=1e-15)


def test_pullback_identity_is_flat():
    mesh = fem_mesh(rectangle(1.0, 2.0), 1)
    a = kn.p1_flat_np(mesh.points, mesh.triangles)
    b = kn.p1_pullback_np(mesh.points, mesh.points, mesh.triangles)
    np.testing.assert_allclose(b[0], a[0], atol=1e-13)
    np.testing.assert_allclose(b[1], a[1], atol=1e-16)


def _mesh():
    return fem_mesh(translate(rectangle(1.0, 1.0), (-0.4, -0.6)), 1)


@pytest.mark.skipif(not kn.HAVE_NUMBA, reason="numba missing")
def test_numba_matches_numpy():
    m = _mesh()
    rng = np.random.default_rng(1)
    dst = m.points + 0.01 * rng.standard_normal(m.points.shape)
    pairs = [
        (kn.p1_flat_np(m.points, m.triangles), kn.p1_flat_nb(m.points, m.triangles)),
        (kn.p1_metric_np(m.points, m.triangles, -0.7, 2.0),
         kn.p1_metric_nb(m.points, m.triangles, -0.7, 2.0, kn.QUAD_BARY, kn.QUAD_W)),
        (kn.p1_pullback_np(m.points, dst, m.triangles), kn.p1_pullback_nb(m.points, dst, m.triangles)),
    ]
    for (Ka, Ma), (Kb, Mb) in pairs:
        np.testing.assert_allclose(Kb, Ka, rtol=1e-12, atol=1e-13)
        np.testing.assert_allclose(Mb, Ma, rtol=1e-12, atol=1e-16)


def test_env_flag_selects_numpy(monkeypatch):
    monkeypatch.setenv("POLYSPEC_DISABLE_NUMBA", "1")
    assert kn.backend() == "numpy"
    monkeypatch.setenv("POLYSPEC_DISABLE_NUMBA", "0")
    assert kn.backend() == ("numba" if kn.HAVE_NUMBA else "numpy")


def test_dispatch_same_result_both_backends(monkeypatch):
    m = _mesh()
    monkeypatch.setenv("POLYSPEC_DISABLE_NUMBA", "1")
    a = kn.p1_metric(m.points, m.triangles, 1.0, 1.0)
    monkeypatch.delenv("POLYSPEC_DISABLE_NUMBA")
    b = kn.p1_metric(m.points, m.triangles, 1.0, 1.0)
    np.testing.assert_allclose(a[0], b[0], rtol=1e-12, atol=1e-13)
