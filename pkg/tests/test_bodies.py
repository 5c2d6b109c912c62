import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tensorbodies import (ConvexHullUnion, Ellipsoid, HPolytope, Intersection, MinkowskiSum, Polar,
                          VPolytope, euclidean_product, hausdorff, lp_ball, numeric_tolerance,
                          random_polytope)
from tensorbodies.errors import DimensionError
from tensorbodies.linalg import kron_vec

SQRT2 = np.sqrt(2.0)


def _bodies(seed):
    """A mix of representations in dimension 3."""
    r = np.random.default_rng(seed)
    A = r.standard_normal((3, 3))
    V = random_polytope(3, 6, r)
    E = Ellipsoid(A @ A.T + 0.5 * np.eye(3))
    return [V, V.polar(), E, MinkowskiSum([(1.0, V), (0.5, E)]),
            ConvexHullUnion([V, E]), Intersection([V.polar(), E])]


class TestGauge:
    def test_cube(self):
        assert lp_ball("inf", 2).gauge([2.0, -1.0]) == 2.0

    def test_cross_polytope(self):
        assert lp_ball(1, 2).gauge([1.0, 1.0]) == pytest.approx(2.0)

    def test_projective_euclidean_on_decomposable(self):
        P = euclidean_product("pi", "2x2")
        assert P.gauge(kron_vec([[1, 0], [0, 1]])) == pytest.approx(1.0, abs=1e-12)

    def test_ellipsoid(self):
        E = Ellipsoid(np.diag([4.0, 1.0]))
        assert E.gauge([1.0, 0.0]) == pytest.approx(2.0)

    def test_zero(self):
        for B in _bodies(0):
            assert B.gauge(np.zeros(3)) == 0.0

    @pytest.mark.parametrize("c", [1e-170, 1e-300, 1e250])
    def test_extreme_scales(self, c):
        x = np.array([0.3, -1.2, 0.5])
        for B in _bodies(5):
            assert B.gauge(c * x) / c == pytest.approx(B.gauge(x), rel=1e-7)
            assert B.support(c * x) / c == pytest.approx(B.support(x), rel=1e-7)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            lp_ball(1, 2).gauge([1.0, 2.0, 3.0])

    @given(st.integers(0, 1000), st.floats(-5, 5))
    def test_homogeneous_and_subadditive(self, seed, lam):
        r = np.random.default_rng(seed)
        x, y = r.standard_normal((2, 3))
        for B in _bodies(seed % 7):
            gx = B.gauge(x)
            assert B.gauge(lam * x) == pytest.approx(abs(lam) * gx, rel=1e-8, abs=1e-10)
            assert B.gauge(x + y) <= gx + B.gauge(y) + 1e-8 * (1 + gx)


class TestSupport:
    def test_examples(self):
        assert lp_ball(1, 2).support([3.0, -4.0]) == pytest.approx(4.0)
        assert lp_ball(2, 2).support([3.0, 4.0]) == pytest.approx(5.0)
        assert lp_ball("inf", 2).support([1.0, 1.0]) == pytest.approx(2.0)

    @given(st.integers(0, 1000))
    def test_support_is_polar_gauge(self, seed):
        r = np.random.default_rng(seed)
        U = r.standard_normal((20, 3))
        for B in _bodies(seed % 7):
            np.testing.assert_allclose(B.supports(U), B.polar().gauges(U), rtol=1e-7)

    def test_support_point_attains(self, rng):
        U = rng.standard_normal((10, 3))
        for B in _bodies(3):
            h, X = B.support_data(U)
            np.testing.assert_allclose(np.einsum("ij,ij->i", X, U), h, rtol=1e-7)
            assert np.all(B.gauges(X) <= 1 + 1e-7)


class TestPolar:
    def test_cross_polytope_to_cube(self):
        assert hausdorff(lp_ball(1, 2).polar(), lp_ball("inf", 2)) == pytest.approx(0, abs=1e-12)

    def test_ellipsoid(self):
        np.testing.assert_allclose(Ellipsoid(np.diag([4.0, 1.0])).polar().M, np.diag([0.25, 1.0]))

    @given(st.integers(0, 1000))
    def test_involution(self, seed):
        P = random_polytope(3, 7, seed)
        assert hausdorff(P.polar().polar(), P) <= 1e-9

    def test_general_polar_wrapper(self):
        E = Ellipsoid(np.diag([4.0, 1.0, 2.0]))
        S = MinkowskiSum([(1.0, E), (1.0, lp_ball(1, 3))])
        Q = S.polar()
        assert isinstance(Q, Polar)
        assert Q.polar() is S


class TestRepresentations:
    def test_vpolytope_prunes(self):
        P = VPolytope(np.array([[1.0, 0.0], [0.0, 1.0], [0.2, 0.2]]))
        assert len(P.vertices) == 2

    def test_hpolytope_vertices(self):
        V = HPolytope(np.eye(2)).vertices
        assert len(V) == 2
        np.testing.assert_allclose(np.abs(V), 1.0)

    def test_ellipsoid_ball(self):
        E = Ellipsoid.ball(3, 2.0)
        np.testing.assert_allclose(E.M, np.eye(3) / 4)
        assert E.circumradius() == pytest.approx(2.0)
        np.testing.assert_allclose(E.xi(), 2 * np.eye(3))

    def test_rejects_non_spd(self):
        with pytest.raises(Exception):
            Ellipsoid(np.diag([1.0, -1.0]))

    def test_with_shape(self):
        P = lp_ball(1, 4).with_shape("2x2")
        assert P.shape.dims == (2, 2)
        with pytest.raises(DimensionError):
            lp_ball(1, 4).with_shape("2x3")

    def test_linear_images(self):
        E = lp_ball(2, 2).linear_image(2 * np.eye(2))
        np.testing.assert_allclose(E.M, np.eye(2) / 4)
        t = 0.7
        R = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
        np.testing.assert_allclose(lp_ball(2, 2).linear_image(R).M, np.eye(2), atol=1e-12)

    def test_radii(self):
        C = lp_ball("inf", 3)
        assert C.circumradius() == pytest.approx(np.sqrt(3))
        assert C.inradius() == pytest.approx(1.0)

    def test_numeric_tolerance_context(self):
        S = MinkowskiSum([(1.0, lp_ball(2, 3)), (1.0, lp_ball(1, 3))])
        x = np.array([0.3, -1.2, 0.5])
        with numeric_tolerance(1e-4):
            coarse = S.gauge(x)
        assert coarse == pytest.approx(S.gauge(x), rel=1e-3)
