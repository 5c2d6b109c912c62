import numpy as np
import pytest

from tensorbodies import (Ellipsoid, FactorMap, bm_estimate, containment_factor, euclidean_product,
                          lp_ball, orbit_invariance_check, projective_product, random_factor_map,
                          random_polytope, random_tensorial)
from tensorbodies.errors import DimensionError, PreconditionError
from tensorbodies.linalg import TensorShape

S22 = TensorShape((2, 2))


@pytest.fixture(scope="module")
def tensorial_pair():
    rng = np.random.default_rng(7)
    P, _ = random_tensorial(S22, "pi", rng)
    T = random_factor_map(S22, rng, cond=3.0)
    return P, P.linear_image(T)


class TestContainmentFactor:
    def test_identity_on_self(self):
        P = random_polytope(3, 6, 1)
        assert containment_factor(P, P, np.eye(3)) == pytest.approx(1.0, abs=1e-12)

    def test_scaling_is_free(self):
        P = random_polytope(3, 6, 2)
        assert containment_factor(P, P, 2.5 * np.eye(3)) == pytest.approx(1.0, abs=1e-12)

    def test_cube_and_cross_polytope(self):
        # Q <= C <= 2 Q in the plane and the rotation by 45 degrees fixes it
        Q, C = lp_ball(1, 2), lp_ball("inf", 2)
        assert containment_factor(Q, C, np.eye(2)) == pytest.approx(2.0, abs=1e-12)
        c, s = np.cos(np.pi / 4), np.sin(np.pi / 4)
        R = np.sqrt(2.0) * np.array([[c, -s], [s, c]])
        assert containment_factor(Q, C, R) == pytest.approx(1.0, abs=1e-12)


class TestEstimate:
    def test_self_distance(self, tensorial_pair):
        P, _ = tensorial_pair
        res = bm_estimate(P, P, "tensorial", restarts=4, seed=0)
        assert 1.0 <= res.value <= 1.0 + 1e-6
        assert isinstance(res.map, FactorMap)

    def test_image_distance(self, tensorial_pair):
        P, R = tensorial_pair
        res = bm_estimate(P, R, "tensorial", restarts=32, seed=1)
        assert 1.0 - 1e-12 <= res.value <= 1.0 + 1e-3
        # the reported value is the exact factor of the reported map
        assert containment_factor(P, R, res.map) == pytest.approx(res.value, rel=1e-12)

    def test_value_at_least_one(self):
        P = random_polytope(2, 5, 3)
        R = random_polytope(2, 4, 4)
        res = bm_estimate(P, R, "classical", restarts=6, seed=0)
        assert res.value >= 1.0 - 1e-12
        assert containment_factor(P, R, res.map) == pytest.approx(res.value, rel=1e-12)

    def test_classical_square_and_diamond(self):
        res = bm_estimate(lp_ball(1, 2), lp_ball("inf", 2), "classical", restarts=8, seed=0)
        assert res.value == pytest.approx(1.0, abs=1e-4)

    def test_scale_invariance(self):
        P = random_polytope(2, 5, 5)
        R = random_polytope(2, 5, 6)
        a = bm_estimate(P, R, "classical", restarts=8, seed=0).value
        b = bm_estimate(P.scaled(3.0), R, "classical", restarts=8, seed=0).value
        assert b == pytest.approx(a, rel=0.02)

    def test_pi_eps_euclidean(self):
        res = bm_estimate(euclidean_product("pi", S22), euclidean_product("eps", S22),
                          "tensorial", restarts=16, seed=0)
        assert 1.5 <= res.value <= 2.001

    def test_tensorial_needs_shapes(self):
        with pytest.raises(PreconditionError):
            bm_estimate(lp_ball(2, 4), lp_ball(2, 4), "tensorial")

    def test_tensorial_rejects_non_tensorial(self):
        P = random_polytope(4, 8, 0, shape=S22)
        with pytest.raises(PreconditionError):
            bm_estimate(P, P, "tensorial", restarts=1)

    def test_bad_arguments(self):
        P = lp_ball(2, 2)
        with pytest.raises(ValueError):
            bm_estimate(P, P, "other")
        with pytest.raises(ValueError):
            bm_estimate(P, P, restarts=0)
        with pytest.raises(DimensionError):
            bm_estimate(P, lp_ball(2, 3))

    def test_seed_is_deterministic(self):
        P = random_polytope(2, 5, 8)
        R = random_polytope(2, 6, 9)
        a = bm_estimate(P, R, restarts=4, seed=3)
        b = bm_estimate(P, R, restarts=4, seed=3)
        assert a.value == b.value


class TestOrbitInvariance:
    @pytest.mark.parametrize("body", [
        Ellipsoid.ball(4, shape=S22),
        projective_product([Ellipsoid.ball(2), Ellipsoid.ball(2)], S22),
        euclidean_product("eps", S22),
    ], ids=["ball", "pi", "eps"])
    def test_euclidean_bodies_are_fixed(self, body):
        assert orbit_invariance_check(body, trials=10) <= 1e-8

    def test_random_polytope_moves(self):
        P = random_polytope(4, 8, 11, shape=S22)
        assert orbit_invariance_check(P, trials=5) > 0.01

    def test_needs_shape(self):
        with pytest.raises(PreconditionError):
            orbit_invariance_check(lp_ball(2, 4))
