import numpy as np
import pytest

from netfactor.errors import DimensionError, InputError
from netfactor.matcore import (
    as_matrix,
    frobenius_sq,
    hadamard,
    matmul,
    ones_column,
    pos_neg_split,
    require_nonnegative,
    row_sums,
)


class TestMatmul:
    def test_identity(self):
        m = np.arange(12, dtype=float).reshape(3, 4)
        np.testing.assert_array_equal(matmul(np.eye(3), m), m)

    def test_hand_arithmetic(self):
        np.testing.assert_array_equal(matmul([[1, 2], [3, 4]], [[1], [1]]), [[3.0], [7.0]])

    def test_matches_triple_loop(self):
        rng = np.random.default_rng(1)
        a = rng.random((5, 7))
        b = rng.random((7, 3))
        expected = np.zeros((5, 3))
        for i in range(5):
            for j in range(3):
                for t in range(7):
                    expected[i, j] += a[i, t] * b[t, j]
        np.testing.assert_allclose(matmul(a, b), expected, rtol=1e-12)

    def test_associative(self):
        rng = np.random.default_rng(2)
        a, b, c = rng.random((4, 5)), rng.random((5, 3)), rng.random((3, 6))
        np.testing.assert_allclose(matmul(matmul(a, b), c), matmul(a, matmul(b, c)), rtol=1e-10)

    def test_shape_mismatch_names_both_shapes(self):
        with pytest.raises(DimensionError, match="2x3.*4x2"):
            matmul(np.ones((2, 3)), np.ones((4, 2)))


class TestFrobeniusSq:
    def test_zero(self):
        assert frobenius_sq(np.zeros((4, 4))) == 0.0

    def test_three_four_five(self):
        assert frobenius_sq([[3, 4]]) == 25.0

    def test_matches_scalar_loop(self):
        rng = np.random.default_rng(3)
        m = rng.standard_normal((6, 6))
        expected = sum(float(v) ** 2 for v in m.ravel())
        assert frobenius_sq(m) == pytest.approx(expected, rel=1e-12)

    def test_symmetric_in_difference(self):
        rng = np.random.default_rng(4)
        a, b = rng.random((3, 5)), rng.random((3, 5))
        assert frobenius_sq(a - b) == frobenius_sq(b - a)

    def test_rejects_nan(self):
        with pytest.raises(InputError):
            frobenius_sq([[1.0, np.nan]])


class TestHadamard:
    def test_identity_and_annihilator(self):
        m = np.arange(6, dtype=float).reshape(2, 3)
        np.testing.assert_array_equal(hadamard(m, np.ones_like(m)), m)
        np.testing.assert_array_equal(hadamard(m, np.zeros_like(m)), np.zeros_like(m))

    def test_hand_arithmetic(self):
        np.testing.assert_array_equal(hadamard([[1, 2], [3, 4]], [[0, 1], [1, 0]]), [[0, 2], [3, 0]])

    def test_no_broadcasting(self):
        with pytest.raises(DimensionError):
            hadamard(np.ones((2, 2)), np.ones((1, 2)))


class TestPosNegSplit:
    def test_sign_split(self):
        split = pos_neg_split([[-1.0, 2.0]])
        np.testing.assert_array_equal(split.plus, [[0.0, 2.0]])
        np.testing.assert_array_equal(split.minus, [[1.0, 0.0]])

    def test_nonnegative_input(self):
        m = np.random.default_rng(5).random((3, 4))
        split = pos_neg_split(m)
        np.testing.assert_array_equal(split.plus, m)
        np.testing.assert_array_equal(split.minus, np.zeros_like(m))

    def test_reconstructs_exactly_with_disjoint_supports(self):
        m = np.random.default_rng(6).standard_normal((7, 5))
        split = pos_neg_split(m)
        np.testing.assert_array_equal(split.plus - split.minus, m)
        np.testing.assert_array_equal(split.plus * split.minus, np.zeros_like(m))
        assert split.plus.min() >= 0.0 and split.minus.min() >= 0.0


class TestRowSums:
    def test_constant_and_zero(self):
        np.testing.assert_array_equal(row_sums(np.ones((3, 3))), [3.0, 3.0, 3.0])
        np.testing.assert_array_equal(row_sums(np.zeros((2, 4))), [0.0, 0.0])

    def test_matches_ones_column_product(self):
        m = np.random.default_rng(7).random((5, 5))
        np.testing.assert_allclose(row_sums(m), matmul(m, ones_column(5)).ravel(), rtol=1e-14)


class TestValidation:
    def test_as_matrix_rejects_vectors(self):
        with pytest.raises(DimensionError):
            as_matrix([1.0, 2.0])

    def test_as_matrix_rejects_inf(self):
        with pytest.raises(InputError):
            as_matrix([[np.inf]])

    def test_require_nonnegative(self):
        with pytest.raises(InputError, match="nonnegative"):
            require_nonnegative(np.array([[0.0, -1e-3]]), name="V")
