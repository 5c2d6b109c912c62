import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tensorbodies import (Ellipsoid, HPolytope, VPolytope, conv_union, convert_rep, hausdorff,
                          hausdorff_lower_bound, injective_product, inscribed_polygon, intersect,
                          lp_ball, minkowski_combination, minkowski_sum, nu, projective_product,
                          provably_contained, random_polytope)
from tensorbodies.errors import DimensionError
from tensorbodies.linalg import TensorShape

SQRT2 = np.sqrt(2.0)


def _same(P, Q, tol=1e-9):
    return hausdorff(P, Q) <= tol


class TestMinkowskiSum:
    def test_cube_doubles(self):
        assert _same(minkowski_sum(lp_ball("inf", 2), lp_ball("inf", 2)), lp_ball("inf", 2, 2.0))

    def test_octagon(self):
        S = minkowski_sum(lp_ball("inf", 2), lp_ball(1, 2))
        expected = VPolytope(np.array([[2.0, 1.0], [1.0, 2.0], [-1.0, 2.0], [-2.0, 1.0]]))
        assert _same(S, expected)
        assert len(S.vertices) == 4

    def test_convex_combination_of_same_body(self, rng):
        P = random_polytope(3, 6, rng)
        for t in (0.0, 0.3, 1.0):
            assert _same(minkowski_combination([(1 - t, P), (t, P)]), P)

    @given(st.integers(0, 1000))
    def test_support_adds(self, seed):
        r = np.random.default_rng(seed)
        P, Q = random_polytope(3, 5, r), random_polytope(3, 6, r)
        E = Ellipsoid(np.diag(r.uniform(0.5, 2, 3)))
        U = r.standard_normal((30, 3))
        np.testing.assert_allclose(minkowski_sum(P, Q).supports(U), P.supports(U) + Q.supports(U),
                                   rtol=1e-9)
        np.testing.assert_allclose(minkowski_sum(P, E).supports(U), P.supports(U) + E.supports(U),
                                   rtol=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            minkowski_sum(lp_ball(1, 2), lp_ball(1, 3))


class TestHullAndIntersection:
    def test_hull_examples(self):
        assert _same(conv_union(lp_ball(1, 2), lp_ball("inf", 2)), lp_ball("inf", 2))
        P = random_polytope(3, 5, 1)
        assert _same(conv_union(P, P), P)
        # a segment is not a body; a thin rhombus with the same far vertices gives the same hull
        H = conv_union(VPolytope(np.array([[2.0, 0.0], [0.0, 0.5]])), lp_ball("inf", 2))
        assert _same(H, VPolytope(np.array([[2.0, 0.0], [1.0, 1.0], [-1.0, 1.0]])))

    def test_intersection_examples(self):
        assert _same(intersect(lp_ball("inf", 2), lp_ball(1, 2, 2.0)), lp_ball("inf", 2))
        assert _same(intersect(lp_ball("inf", 2), lp_ball(1, 2)), lp_ball(1, 2))

    @given(st.integers(0, 1000))
    def test_intersection_gauge_is_max(self, seed):
        r = np.random.default_rng(seed)
        P, Q = HPolytope(r.standard_normal((4, 3))), HPolytope(r.standard_normal((5, 3)))
        X = r.standard_normal((100, 3))
        np.testing.assert_allclose(intersect(P, Q).gauges(X),
                                   np.maximum(P.gauges(X), Q.gauges(X)), rtol=1e-10)
        assert nu(intersect(P, Q), P) <= 1 + 1e-9

    def test_mixed_hull_support_is_max(self, rng):
        P, E = random_polytope(3, 5, rng), Ellipsoid(np.diag([0.5, 2.0, 1.0]))
        U = rng.standard_normal((30, 3))
        np.testing.assert_allclose(conv_union(P, E).supports(U),
                                   np.maximum(P.supports(U), E.supports(U)), rtol=1e-9)


class TestConvert:
    def test_cube_to_h(self):
        H = convert_rep(VPolytope(np.array([[1.0, 1.0], [1.0, -1.0]])), "H")
        assert hausdorff(H, lp_ball("inf", 2)) <= 1e-12
        assert len(H.normals) == 2

    def test_cross_polytope_3d(self):
        H = convert_rep(lp_ball(1, 3), "H")
        assert len(H.normals) == 4
        np.testing.assert_allclose(np.abs(H.normals), 1.0)

    def test_round_trip_random(self, rng):
        P = random_polytope(4, 9, rng)
        assert hausdorff(convert_rep(convert_rep(P, "H"), "V"), P) <= 1e-8

    def test_ellipsoid_outer_approximation(self):
        E = Ellipsoid(np.diag([1.0, 4.0]))
        P = convert_rep(E, "H", tol=1e-3)
        assert nu(E, P) <= 1 + 1e-9
        assert nu(P, E) <= 1 + 1e-3
        E3 = Ellipsoid(np.diag([1.0, 4.0, 2.0]))
        for target in ("H", "V"):
            P3 = convert_rep(E3, target, tol=1e-2)
            outer, inner = (P3, E3) if target == "H" else (E3, P3)
            assert nu(inner, outer) <= 1 + 1e-9
            assert nu(outer, inner) <= 1 + 1e-2


class TestNu:
    def test_examples(self):
        assert nu(lp_ball("inf", 2), lp_ball(2, 2)) == pytest.approx(SQRT2, rel=1e-12)
        assert nu(lp_ball(2, 2), lp_ball(1, 2)) == pytest.approx(SQRT2, rel=1e-9)
        P = random_polytope(3, 6, 4)
        assert nu(P, P) == pytest.approx(1.0, rel=1e-12)

    def test_ellipsoids(self):
        E, F = Ellipsoid(np.diag([1.0, 4.0])), Ellipsoid(np.diag([2.0, 1.0]))
        # smallest c with E in cF: the largest generalised eigenvalue of (F, E), square-rooted
        assert nu(E, F) == pytest.approx(np.sqrt(2.0), rel=1e-12)

    @given(st.integers(0, 1000))
    def test_hausdorff_zero_iff_mutual_containment(self, seed):
        r = np.random.default_rng(seed)
        P = random_polytope(3, 6, r)
        Q = VPolytope(np.vstack([P.vertices, 0.5 * r.standard_normal((1, 3))]))
        zero = hausdorff(P, Q) <= 1e-8
        assert zero == (nu(P, Q) <= 1 + 1e-8 and nu(Q, P) <= 1 + 1e-8)


class TestHausdorff:
    def test_examples(self):
        assert hausdorff(lp_ball(2, 2), lp_ball("inf", 2)) == pytest.approx(SQRT2 - 1, abs=1e-9)
        assert hausdorff(lp_ball("inf", 2), lp_ball("inf", 2, 2.0)) == pytest.approx(SQRT2,
                                                                                     abs=1e-9)
        P = random_polytope(3, 6, 2)
        assert hausdorff(P, P) == pytest.approx(0.0, abs=1e-12)

    def test_with_error(self):
        res = hausdorff(lp_ball(2, 2), lp_ball("inf", 2), with_error=True)
        assert res.value == pytest.approx(SQRT2 - 1, abs=1e-9)

    @given(st.integers(0, 1000))
    def test_lower_bound_never_exceeds_exact(self, seed):
        r = np.random.default_rng(seed)
        P, Q = random_polytope(3, 5, r), random_polytope(3, 6, r)
        exact = hausdorff(P, Q)
        assert hausdorff_lower_bound(P, Q, 500, seed) <= exact + 1e-9

    def test_symmetric(self, rng):
        P, Q = random_polytope(3, 5, rng), Ellipsoid(np.diag([1.0, 2.0, 0.5]))
        assert hausdorff(P, Q) == pytest.approx(hausdorff(Q, P), rel=1e-6)


class TestInscribedPolygon:
    def test_disk(self):
        Q = inscribed_polygon(Ellipsoid.ball(2), 1e-6)
        assert nu(Q, Ellipsoid.ball(2)) <= 1 + 1e-12
        assert nu(Ellipsoid.ball(2), Q) <= 1 + 1e-6

    def test_polygon_is_recovered(self):
        C = lp_ball("inf", 2)
        Q = inscribed_polygon(C, 1e-9)
        assert hausdorff(Q, C) <= 1e-12

    def test_anchor_kept(self):
        x = np.array([1.2, 1.6])
        Q = inscribed_polygon(Ellipsoid.ball(2, 2.0), 1e-3, anchors=x)
        assert abs(Q.gauge(x) - 1.0) <= 1e-12

    def test_planar_only(self):
        with pytest.raises(DimensionError):
            inscribed_polygon(Ellipsoid.ball(3), 1e-3)


class TestProvablyContained:
    def test_structural_rules(self):
        S = TensorShape((2, 2))
        f = [Ellipsoid.ball(2), lp_ball(1, 2)]
        Pi = projective_product(f, S)
        Eps = injective_product(f, S)
        K = Ellipsoid.ball(4, shape=S)
        assert provably_contained(Pi, Eps)
        assert provably_contained(Pi, conv_union(K, Pi))
        assert provably_contained(intersect(conv_union(K, Pi), Eps), Eps)
        assert not provably_contained(Eps, Pi)
        # equal but separately built factors are not matched
        g = [Ellipsoid.ball(2), lp_ball(1, 2)]
        assert not provably_contained(Pi, injective_product(g, S))
