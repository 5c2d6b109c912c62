import numpy as np
import pytest

from tensorbodies import polytope as pt
from tensorbodies.errors import ComplexityError, DimensionError
from tensorbodies.factories import cube_vertices


def _same_rows_up_to_sign(A, B, tol=1e-9):
    A, B = pt.canonical_sign(A), pt.canonical_sign(B)
    assert len(A) == len(B)
    for a in A:
        assert np.min(np.abs(B - a).max(axis=1)) < tol


def test_facets_of_cross_polytope_are_cube_corners():
    A = pt.symmetric_facets(np.eye(3))
    _same_rows_up_to_sign(A, cube_vertices(3))


def test_facets_of_cube_are_coordinate_normals():
    _same_rows_up_to_sign(pt.symmetric_facets(cube_vertices(3)), np.eye(3))


def test_facets_valid_for_random_generators(rng):
    G = rng.standard_normal((12, 4))
    A = pt.symmetric_facets(G)
    assert np.abs(G @ A.T).max() <= 1 + 1e-9
    # every facet touches the hull
    assert np.all(np.abs(G @ A.T).max(axis=0) >= 1 - 1e-9)


def test_degenerate_facets_are_handled():
    # the octagon and square corners share many coplanar points in R^4
    G = np.vstack([cube_vertices(4), np.eye(4) * 2.0, np.eye(4)])
    A = pt.symmetric_facets(G)
    assert np.abs(G @ A.T).max() <= 1 + 1e-8


def test_lower_dimensional_hull_rejected():
    with pytest.raises(DimensionError):
        pt.symmetric_facets(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))


def test_dimension_cap():
    with pytest.raises(ComplexityError):
        pt.symmetric_facets(np.eye(11))


def test_prune_drops_interior_points():
    G = np.vstack([np.eye(2), [[0.3, 0.3], [-0.5, 0.1]], [[1.0, 0.0]]])
    P = pt.prune_generators(G)
    _same_rows_up_to_sign(P, np.eye(2))


def test_prune_lp_matches_hull(rng):
    G = rng.standard_normal((15, 3))
    _same_rows_up_to_sign(pt.prune_generators_lp(G), pt.prune_generators(G))


def test_lp_gauge_and_dual():
    g, w = pt.lp_gauge(np.eye(2), np.array([1.0, 1.0]), dual=True)
    assert g == pytest.approx(2.0)
    assert w @ np.array([1.0, 1.0]) == pytest.approx(2.0)
    assert np.abs(w).max() <= 1 + 1e-9
    assert pt.lp_gauge(np.eye(2), np.zeros(2)) == 0.0


def test_lp_support():
    h, x = pt.lp_support(np.eye(2), np.array([1.0, 1.0]), point=True)
    assert h == pytest.approx(2.0)
    np.testing.assert_allclose(x, [1.0, 1.0], atol=1e-9)


def test_min_norm_point():
    W = np.array([[1.0, 1.0], [1.0, -1.0], [3.0, 0.0]])
    np.testing.assert_allclose(pt.min_norm_point(W), [1.0, 0.0], atol=1e-10)


def test_distance_to_polytope(rng):
    y = np.array([2.0, 2.0])
    assert pt.distance_to_polytope(y, np.eye(2)) == pytest.approx(np.sqrt(4.5), rel=1e-9)
    assert pt.distance_to_polytope(np.array([0.1, 0.2]), np.eye(2)) == pytest.approx(0.0, abs=1e-12)


def test_unique_up_to_sign():
    X = np.array([[1.0, 2.0], [-1.0, -2.0], [1.0, 2.0 + 1e-14], [0.0, 1.0]])
    assert len(pt.unique_up_to_sign(X)) == 2
