import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tensorbodies.errors import DimensionError, NumericalError
from tensorbodies.linalg import (FactorMap, TensorShape, embed_slot, factor_map_apply, kron_all,
                                 kron_rows, kron_vec, random_factor_map, random_orthogonal,
                                 spd_inv, spd_inv_sqrt, spd_sqrt)

S22 = TensorShape((2, 2))
S23 = TensorShape((2, 3))
S222 = TensorShape((2, 2, 2))


class TestTensorShape:
    def test_parse_and_total(self):
        s = TensorShape.parse("2x3")
        assert s.dims == (2, 3)
        assert s.total == 6 and s.order == 2
        assert TensorShape.parse([2, 2, 2]) == S222
        assert str(S23) == "2x3"

    @pytest.mark.parametrize("bad", ["2x", "axb", [1, 3], []])
    def test_rejects_bad_shapes(self, bad):
        with pytest.raises(DimensionError):
            TensorShape.parse(bad)

    def test_row_major_flattening(self):
        assert S23.flat_index((1, 2)) == 5
        assert S222.flat_index((0, 1, 0)) == 2

    def test_admissible_perms(self):
        assert S23.admissible_perms() == [(0, 1)]
        assert len(S22.admissible_perms()) == 2
        assert len(S222.admissible_perms()) == 6


class TestKron:
    def test_basis(self):
        np.testing.assert_array_equal(kron_vec([[1, 0], [0, 1]], S22), [0, 1, 0, 0])

    def test_norm_two(self):
        v = kron_vec([[1, 1], [1, 1]])
        np.testing.assert_array_equal(v, np.ones(4))
        assert np.linalg.norm(v) == pytest.approx(2.0)

    def test_three_factors(self):
        v = kron_vec([[2, 0], [0, 3], [1, 0]], S222)
        expected = np.zeros(8)
        expected[S222.flat_index((0, 1, 0))] = 6.0
        np.testing.assert_array_equal(v, expected)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            kron_vec([[1, 0], [1, 0, 0]], S22)

    def test_rows_and_all(self, rng):
        A, B = rng.standard_normal((5, 2)), rng.standard_normal((5, 3))
        R = kron_rows([A, B])
        for n in range(5):
            np.testing.assert_allclose(R[n], np.kron(A[n], B[n]))
        K = kron_all([A[:2], B[:3]])
        assert K.shape == (6, 6)
        np.testing.assert_allclose(K[4], np.kron(A[1], B[1]))

    def test_embed_slot(self, rng):
        x = rng.standard_normal(3)
        E = embed_slot(S23, 1)
        np.testing.assert_allclose(E @ x, kron_vec([[1, 0], x]))

    @given(st.integers(0, 10_000))
    def test_norm_multiplicative(self, seed):
        r = np.random.default_rng(seed)
        xs = [r.standard_normal(d) for d in S222.dims]
        assert np.linalg.norm(kron_vec(xs)) == pytest.approx(
            np.prod([np.linalg.norm(x) for x in xs]), rel=1e-12)

    @given(st.integers(0, 10_000))
    def test_multilinear(self, seed):
        r = np.random.default_rng(seed)
        x, y, z = r.standard_normal(2), r.standard_normal(2), r.standard_normal(3)
        a, b = r.standard_normal(2)
        lhs = kron_vec([a * x + b * y, z])
        rhs = a * kron_vec([x, z]) + b * kron_vec([y, z])
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


class TestFactorMap:
    def test_swap(self):
        U = FactorMap((np.eye(2), np.eye(2)), (1, 0), S22)
        e1, e2 = np.eye(2)
        np.testing.assert_array_equal(U.apply(kron_vec([e1, e2])), kron_vec([e2, e1]))

    def test_scalars_cancel(self, rng):
        T = FactorMap((2 * np.eye(2), 0.5 * np.eye(2)), shape=S22)
        x = rng.standard_normal(4)
        np.testing.assert_allclose(factor_map_apply(T, x), x)

    def test_inadmissible_perm(self):
        with pytest.raises(DimensionError):
            FactorMap((np.eye(2), np.eye(3)), (1, 0), S23)

    def test_decomposables_preserved(self, rng):
        T = random_factor_map(S222, rng)
        xs = [rng.standard_normal(2) for _ in range(3)]
        expected = kron_vec([T.factors[i] @ xs[T.perm[i]] for i in range(3)])
        np.testing.assert_allclose(T.apply(kron_vec(xs)), expected, atol=1e-12)
        np.testing.assert_allclose(T.matrix() @ kron_vec(xs), expected, atol=1e-12)

    def test_orthogonal_isometry(self, rng):
        U = random_factor_map(S23, rng, orthogonal=True)
        x = rng.standard_normal(6)
        assert np.linalg.norm(U.apply(x)) == pytest.approx(np.linalg.norm(x), rel=1e-12)
        M = U.matrix()
        np.testing.assert_allclose(M @ M.T, np.eye(6), atol=1e-10)

    @given(st.integers(0, 10_000))
    def test_composition_and_inverse(self, seed):
        r = np.random.default_rng(seed)
        T, S = random_factor_map(S222, r), random_factor_map(S222, r)
        x = r.standard_normal(8)
        np.testing.assert_allclose((T @ S).apply(x), T.apply(S.apply(x)), atol=1e-10)
        np.testing.assert_allclose(T.inverse().apply(T.apply(x)), x, atol=1e-10)
        np.testing.assert_allclose(T.transpose().matrix(), T.matrix().T, atol=1e-12)


class TestSPD:
    def test_diag(self):
        np.testing.assert_allclose(spd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))
        np.testing.assert_allclose(spd_sqrt(np.eye(3)), np.eye(3))

    def test_random(self, rng):
        A = rng.standard_normal((5, 5))
        M = A @ A.T + 0.1 * np.eye(5)
        S = spd_sqrt(M)
        assert np.linalg.norm(S @ S - M) <= 1e-10 * np.linalg.norm(M)
        np.testing.assert_allclose(spd_inv_sqrt(M) @ S, np.eye(5), atol=1e-9)
        np.testing.assert_allclose(spd_inv(M) @ M, np.eye(5), atol=1e-9)

    def test_rejects_non_spd(self):
        with pytest.raises(NumericalError):
            spd_sqrt(np.diag([1.0, -1.0]))
        with pytest.raises(NumericalError):
            spd_sqrt(np.array([[1.0, 2.0], [0.0, 1.0]]))
        with pytest.raises(DimensionError):
            spd_sqrt(np.ones((2, 3)))

    def test_haar_orthogonal(self, rng):
        Q = random_orthogonal(4, rng)
        np.testing.assert_allclose(Q @ Q.T, np.eye(4), atol=1e-12)
