import numpy as np
import pytest

from tensorbodies import (Ellipsoid, MinkowskiSum, hausdorff, lp_ball, lowner, mvee, normalize_lowner,
                          nu, projective_product, random_polytope, xi)
from tensorbodies.errors import DimensionError
from tensorbodies.linalg import random_orthogonal, spd_sqrt
from tensorbodies.lowner import contact_points, in_lowner_position


def test_square_gives_circumscribed_disk():
    E = lowner(lp_ball("inf", 2))
    np.testing.assert_allclose(E.M, np.eye(2) / 2, atol=1e-9)


def test_cross_polytope_gives_unit_disk():
    np.testing.assert_allclose(lowner(lp_ball(1, 2)).M, np.eye(2), atol=1e-9)


def test_cube_product_gives_twice_ball():
    C = lp_ball("inf", 2)
    E = lowner(projective_product([C, C], "2x2"))
    assert hausdorff(E, Ellipsoid.ball(4, 2.0)) <= 1e-5


@pytest.mark.parametrize("d", [2, 3, 4])
def test_cube_in_any_dimension(d):
    res = mvee(lp_ball("inf", d).vertices)
    np.testing.assert_allclose(res.ellipsoid.M * d, np.eye(d), atol=1e-6)
    assert res.gap <= 1e-7


def test_ellipsoid_is_its_own_lowner():
    E = Ellipsoid(np.diag([1.0, 3.0]))
    assert lowner(E) is E


def test_rejects_degenerate_points():
    with pytest.raises(DimensionError):
        mvee(np.array([[1.0, 0.0], [2.0, 0.0]]))


def test_contains_and_john_contacts(rng):
    P = random_polytope(3, 8, rng)
    E = lowner(P)
    assert nu(P, E) <= 1 + 1e-6
    # John: at least d(d+1)/2 signed contact points, listed once per antipodal pair
    assert 2 * len(contact_points(P, E)) >= 3 * 4 // 2


def test_orthogonal_equivariance(rng):
    P = random_polytope(3, 7, rng)
    U = random_orthogonal(3, rng)
    assert hausdorff(lowner(P.linear_image(U)), lowner(P).linear_image(U)) <= 1e-5


def test_scale_equivariance(rng):
    P = random_polytope(3, 7, rng)
    np.testing.assert_allclose(lowner(P.scaled(3.0)).M * 9.0, lowner(P).M, rtol=1e-6)


def test_non_polytope_via_oracle(rng):
    # a disk plus a segment-like square: Löwner ellipsoid must contain the body
    S = MinkowskiSum([(1.0, lp_ball(2, 2)), (0.5, lp_ball("inf", 2))])
    E = lowner(S)
    assert nu(S, E) <= 1 + 1e-6
    # symmetry of the body under the coordinate swap forces a multiple of the identity
    assert abs(E.M[0, 0] - E.M[1, 1]) < 1e-4 and abs(E.M[0, 1]) < 1e-4


class TestXi:
    def test_scaled_ball(self):
        np.testing.assert_allclose(xi(Ellipsoid.ball(3, 2.5)), 2.5 * np.eye(3))

    def test_diag(self):
        np.testing.assert_allclose(xi(Ellipsoid(np.diag([0.25, 1.0]))), np.diag([2.0, 1.0]))

    def test_polar_decomposition(self, rng):
        T = rng.standard_normal((3, 3))
        A = xi(lp_ball(2, 3).linear_image(T))
        np.testing.assert_allclose(A, spd_sqrt(T @ T.T), atol=1e-9)


class TestNormalize:
    def test_scaled_ball(self):
        B, A = normalize_lowner(Ellipsoid.ball(4, 3.0))
        np.testing.assert_allclose(A, 3 * np.eye(4))
        assert hausdorff(B, Ellipsoid.ball(4)) <= 1e-12

    def test_square(self):
        B, A = normalize_lowner(lp_ball("inf", 2))
        np.testing.assert_allclose(A, np.sqrt(2) * np.eye(2), atol=1e-9)
        assert hausdorff(B, lp_ball("inf", 2, 1 / np.sqrt(2))) <= 1e-9

    def test_idempotent_and_scale_free(self, rng):
        P = random_polytope(3, 7, rng)
        B, _ = normalize_lowner(P)
        assert in_lowner_position(B)
        assert hausdorff(normalize_lowner(B)[0], B) <= 1e-6
        assert hausdorff(normalize_lowner(P.scaled(5.0))[0], B) <= 1e-6
        assert hausdorff(lowner(B), Ellipsoid.ball(3)) <= 1e-5
