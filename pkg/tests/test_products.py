import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tensorbodies import (Ellipsoid, euclidean_product, hausdorff, hilbert_product,
                          injective_product, lp_ball, nu, projective_product, random_factor_map,
                          random_polytope, tensor_product)
from tensorbodies.calculus import random_decomposables
from tensorbodies.errors import ComplexityError, DimensionError, PreconditionError
from tensorbodies.linalg import TensorShape, kron_vec

S22 = TensorShape((2, 2))
S23 = TensorShape((2, 3))


def _factors(shape, rng):
    return [random_polytope(d, d + 2, rng) for d in shape.dims]


class TestProjective:
    def test_cross_polytopes(self):
        B1 = lp_ball(1, 2)
        P = projective_product([B1, B1], S22)
        assert len(P.vertices) == 4
        assert hausdorff(P, lp_ball(1, 4)) <= 1e-12
        assert P.shape == S22

    def test_scaling(self):
        B1 = lp_ball(1, 2)
        P = projective_product([B1.scaled(2.0), B1.scaled(0.5)], S22)
        assert hausdorff(P, projective_product([B1, B1], S22)) <= 1e-12

    def test_cubes_give_eight_sign_patterns(self):
        # s (x) t = (-s) (x) (-t): 16 products, 8 distinct signed vertices, 4 antipodal pairs
        C = lp_ball("inf", 2)
        V = projective_product([C, C], S22).vertices
        assert len(np.vstack([V, -V])) == 8 and len(V) == 4
        np.testing.assert_allclose(np.abs(V), 1.0)

    def test_euclidean_gauge_is_nuclear_norm(self, rng):
        P = euclidean_product("pi", S23)
        X = rng.standard_normal((20, 6))
        nuc = np.array([np.linalg.svd(x.reshape(2, 3), compute_uv=False).sum() for x in X])
        np.testing.assert_allclose(P.gauges(X), nuc, rtol=1e-9)

    def test_mixed_factors(self, rng):
        P = projective_product([lp_ball(2, 2), random_polytope(3, 5, rng)], S23)
        parts, X = random_decomposables(S23, 50, rng)
        expected = lp_ball(2, 2).gauges(parts[0]) * P.product_factors[1].gauges(parts[1])
        np.testing.assert_allclose(P.gauges(X), expected, rtol=1e-8)

    def test_caps(self):
        with pytest.raises(ComplexityError):
            projective_product([lp_ball(1, 2)] * 4, "2x2x2x2")
        with pytest.raises(ComplexityError):
            projective_product([lp_ball(1, 4), lp_ball(1, 5)], "4x5")
        with pytest.raises(DimensionError):
            projective_product([lp_ball(1, 2), lp_ball(1, 2)], S23)


class TestInjective:
    def test_dual_of_cube_product(self):
        B1, C = lp_ball(1, 2), lp_ball("inf", 2)
        E = injective_product([B1, B1], S22)
        assert hausdorff(E, projective_product([C, C], S22).polar()) <= 1e-12

    def test_euclidean_identity_probe(self):
        E = euclidean_product("eps", S22)
        assert E.gauge(np.eye(2).ravel()) == pytest.approx(1.0, abs=1e-12)
        assert euclidean_product("pi", S22).gauge(np.eye(2).ravel()) == pytest.approx(2.0)

    @given(st.integers(0, 1000))
    def test_sandwich(self, seed):
        r = np.random.default_rng(seed)
        Ps = _factors(S22, r)
        Pi, Eps = projective_product(Ps, S22), injective_product(Ps, S22)
        assert nu(Pi, Eps) <= 1 + 1e-9
        assert nu(Eps, Pi) <= 2 + 1e-6

    def test_polar_duality(self, rng):
        Ps = _factors(S23, rng)
        lhs = projective_product(Ps, S23).polar()
        rhs = injective_product([P.polar() for P in Ps], S23)
        assert hausdorff(lhs, rhs) <= 1e-8

    def test_non_polytope_factors(self, rng):
        Ps = [lp_ball(2, 2), random_polytope(2, 4, rng)]
        E = injective_product(Ps, S22)
        parts, X = random_decomposables(S22, 30, rng)
        np.testing.assert_allclose(E.gauges(X), Ps[0].gauges(parts[0]) * Ps[1].gauges(parts[1]),
                                   rtol=1e-8)


class TestHilbert:
    def test_scaled_balls(self):
        r2 = Ellipsoid.ball(2, np.sqrt(2))
        E = hilbert_product([r2, r2], S22)
        np.testing.assert_allclose(E.M, np.eye(4) / 4, atol=1e-14)

    def test_unit_balls(self):
        E = hilbert_product([Ellipsoid.ball(2), Ellipsoid.ball(3)], S23)
        np.testing.assert_allclose(E.M, np.eye(6))

    def test_scaling_and_crossnorm(self, rng):
        A, B = rng.standard_normal((2, 2)), rng.standard_normal((3, 3))
        E1, E2 = Ellipsoid(A @ A.T + np.eye(2)), Ellipsoid(B @ B.T + np.eye(3))
        E = hilbert_product([E1, E2], S23)
        F = hilbert_product([E1.scaled(4.0), E2.scaled(0.25)], S23)
        np.testing.assert_allclose(E.M, F.M, rtol=1e-10)
        parts, X = random_decomposables(S23, 30, rng)
        np.testing.assert_allclose(E.gauges(X), E1.gauges(parts[0]) * E2.gauges(parts[1]),
                                   rtol=1e-10)

    def test_rejects_polytopes(self):
        with pytest.raises(PreconditionError):
            hilbert_product([lp_ball(1, 2), Ellipsoid.ball(2)], S22)


@pytest.mark.parametrize("kind", ["pi", "eps"])
@pytest.mark.parametrize("shape", ["2x2", "2x3", "2x2x2"])
def test_crossnorm(kind, shape, rng):
    shape = TensorShape.parse(shape)
    Ps = _factors(shape, rng)
    P = tensor_product(kind, Ps, shape)
    parts, X = random_decomposables(shape, 200, rng)
    rhs = np.prod([f.gauges(x) for f, x in zip(Ps, parts)], axis=0)
    np.testing.assert_allclose(P.gauges(X), rhs, rtol=1e-8)


@pytest.mark.parametrize("kind", ["pi", "eps"])
def test_equivariance(kind, rng):
    Ps = _factors(S22, rng)
    T = random_factor_map(S22, rng)
    lhs = tensor_product(kind, Ps, S22).linear_image(T)
    rhs = tensor_product(kind, [Ps[T.perm[i]].linear_image(T.factors[i]) for i in range(2)], S22)
    assert hausdorff(lhs, rhs) <= 1e-8


def test_upper_sandwich_three_factors(rng):
    shape = TensorShape((2, 2, 2))
    Ps = _factors(shape, rng)
    assert nu(injective_product(Ps, shape), projective_product(Ps, shape)) <= 4 + 1e-6


def test_kron_vec_of_factor_points_is_in_product(rng):
    Ps = _factors(S23, rng)
    P = projective_product(Ps, S23)
    x = kron_vec([Ps[0].vertices[0], Ps[1].vertices[0]])
    assert P.gauge(x) == pytest.approx(1.0, rel=1e-10)
