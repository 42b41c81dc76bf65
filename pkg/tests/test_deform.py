import math

import numpy as np
import pytest

from polyspec.deform import (
    ReentrantCornerWarning,
    certify_simple,
    locate_degeneracy,
    match_branches,
    min_gap,
    random_gap_probe,
    random_polygon,
    relative_gaps,
    richardson,
    sweep_kappa,
    sweep_t,
)
from polyspec.eigensolve import Spectrum
from polyspec.errors import (
    InvalidInput,
    KappaOutOfRange,
    NoMinimumInBracket,
    ResidualsTooLarge,
)
from polyspec.geometry import (
    delete_vertex_path,
    fem_mesh,
    linear_path,
    pl_family,
    rectangle,
    rectangle_width_path,
    translate,
    triangulate_structural,
    validate_polygon,
)
from polyspec.oracle import rect_branch

PI2 = math.pi**2


def spec(vals, res=1e-12, bc="dirichlet", vecs=None):
    vals = np.asarray(vals, float)
    return Spectrum(vals, np.full(len(vals), res), vecs, {"bc": bc})


def test_relative_gaps():
    np.testing.assert_allclose(relative_gaps([1.0, 2.0, 2.0, 4.0]), [1.0, 0.0, 1.0])


def test_min_gap_one_based():
    assert min_gap(spec([1.0, 2.0, 2.1, 5.0])) == (2, pytest.approx(0.05))


def test_min_gap_skips_neumann_zero():
    j, g = min_gap(spec([1e-15, 1.0, 1.5, 1.6], bc="neumann"))
    assert j == 3 and g == pytest.approx(0.1 / 1.5)


def test_richardson_exact_for_h2_model():
    exact, c = 3.0, 2.0
    coarse, fine = exact + c * 0.1**2, exact + c * 0.05**2
    ext, err = richardson([coarse], [fine])
    assert ext[0] == pytest.approx(exact, rel=1e-14)
    assert err[0] == pytest.approx(fine - exact, rel=1e-12)


def test_certify():
    cert = certify_simple(spec([1.0, 2.0, 2.0000001, 3.0]), 3, 1e-6)
    assert cert.simple == [True, False, True]
    with pytest.raises(ResidualsTooLarge):
        certify_simple(spec([1.0, 2.0], res=1e-3), 1, 1e-6)


def test_overlap_matching_follows_eigenvectors():
    e = np.eye(3)
    a = spec([1.0, 2.0, 2.05], vecs=e)
    # at the next sample the two upper modes have swapped places
    b = spec([1.0, 2.01, 2.04], vecs=e[:, [0, 2, 1]])
    order, ov = match_branches([a, b], None, "overlap")
    assert order[1].tolist() == [0, 2, 1]
    np.testing.assert_allclose(ov[1], 1.0)
    order, _ = match_branches([a, b], None, "order")
    assert order[1].tolist() == [0, 1, 2]


def test_constant_path_constant_branches():
    M = fem_mesh(rectangle(1.0, 1.0), 1)
    path = linear_path(M, np.eye(2))
    D = sweep_t(path, k=4, samples=5)
    assert np.all(np.abs(D.values - D.values[0]) <= 1e-8 * D.values[0])


def test_width_sweep_tracks_oracle_branches():
    s0, s1 = 0.8, 1.2
    path = rectangle_width_path(1.0, s0, s1, level=2)
    D = sweep_t(path, k=4, samples=9).reparametrized("s", lambda t: s0 + (s1 - s0) * t)
    assert D.parameter_name == "s"
    # branches 1 and 2 cross at s = 1; overlap matching keeps them on the
    # oracle curves (1,2) and (2,1) rather than sorted order
    a = rect_branch(1.0, (s0, s1), (1, 2))
    b = rect_branch(1.0, (s0, s1), (2, 1))
    s = D.samples
    ex = np.column_stack([a(s), b(s)])
    vals = D.values[:, 1:3]
    # at s < 1 the (2,1) curve is lower; whichever branch starts on a curve must stay on it
    first = vals[:, 0]
    rel_a = np.abs(first / ex[:, 0] - 1)
    rel_b = np.abs(first / ex[:, 1] - 1)
    assert (rel_a.max() < 0.02) != (rel_b.max() < 0.02)
    assert D.gaps[len(s) // 2] < 1e-9


def test_direct_and_pullback_sweeps_agree():
    P = validate_polygon([(0, 0), (1, 0), (1, 1), (0, 1)])
    Q = validate_polygon([(0, 0), (1.3, 0.1), (1.1, 1.2), (-0.1, 0.9)])
    path = pl_family(P, Q, triangulate_structural(P))
    a = sweep_t(path, k=4, samples=4, refine=3)
    b = sweep_t(path, k=4, samples=4, refine=3, method="direct")
    np.testing.assert_allclose(a.values, b.values, rtol=1e-10)


def test_reentrant_warns_and_extrapolates():
    P = validate_polygon([(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)])
    Q = validate_polygon([(0, 0), (2.2, 0), (2.2, 1), (1, 1), (1, 2.2), (0, 2.2)])
    path = pl_family(P, Q, triangulate_structural(P))
    with pytest.warns(ReentrantCornerWarning):
        D = sweep_t(path, k=3, samples=3, refine=2)
    assert D.extrapolated is not None and D.extrapolated.shape == D.values.shape
    assert np.all(D.extrapolated < D.values)


def test_workers_do_not_change_results(monkeypatch):
    path = rectangle_width_path(1.0, 0.9, 1.1, level=1)
    a = sweep_t(path, k=4, samples=5)
    monkeypatch.setenv("POLYSPEC_WORKERS", "3")
    b = sweep_t(path, k=4, samples=5)
    assert a.to_csv() == b.to_csv()


def test_csv_layout():
    D = sweep_t(rectangle_width_path(1.0, 0.9, 1.1, level=0), k=3, samples=2)
    lines = D.to_csv().splitlines()
    assert lines[0] == "param,branch_0,branch_1,branch_2"
    assert len(lines) == 3


def test_kappa_sweep_range_check():
    P = translate(rectangle(2.0, 2.0), (-1.0, -1.0))
    with pytest.raises(KappaOutOfRange):
        sweep_kappa(P, k=3, kappa_values=[0.0, -0.6], level=0)


def test_kappa_sweep_continuous():
    P = translate(rectangle(1.0, 1.0), (-0.5, -0.5))
    D = sweep_kappa(P, k=4, kappa_values=np.linspace(-0.5, 1.0, 7), level=1)
    assert np.all(np.isfinite(D.values))
    # positive curvature shrinks distances and volumes: eigenvalues grow with kappa
    assert np.all(np.diff(D.values[:, 0]) > 0)


def test_locate_constant_path():
    path = linear_path(fem_mesh(rectangle(1.0, 1.0), 0), np.eye(2))
    with pytest.raises(NoMinimumInBracket):
        locate_degeneracy(path, 1, (0.0, 1.0), 1e-3, refine=1)


def test_locate_bad_bracket():
    path = rectangle_width_path(1.0, 0.8, 1.2)
    with pytest.raises(InvalidInput):
        locate_degeneracy(path, 2, (1.0, 0.0))


def test_false_vertex_square_deletion_gap_positive():
    P = validate_polygon([(0, 0), (1, 0), (1, 1), (0.5, 1), (0, 1)])
    path, _ = delete_vertex_path(P)
    D = sweep_t(path, k=3, samples=9, refine=3, method="pullback")
    g = (D.values[:, 1] - D.values[:, 0]) / D.values[:, 0]
    assert g.min() > 0.1


def test_random_polygon_convex():
    rng = np.random.default_rng(0)
    for n in (3, 4, 7):
        P = random_polygon(rng, n)
        assert P.n == n and P.is_convex()


def test_probe_reproducible_and_flags():
    a = random_gap_probe(4, 3, seed=5, k=5, level=0)
    b = random_gap_probe(4, 3, seed=5, k=5, level=0)
    assert a.gaps.tobytes() == b.gaps.tobytes()
    assert a.flagged is None
    assert sum(a.hist_counts) == 3
    t = random_gap_probe(3, 1, seed=1, k=4, level=1)
    assert t.flagged is not None
    with pytest.raises(InvalidInput):
        random_gap_probe(2, 1)
