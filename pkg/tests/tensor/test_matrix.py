"""Tests for the matrix helpers and the finite-difference oracle."""

import numpy as np
import pytest

from src.errors import ContractError, DimensionError, NumericalError
from src.tensor import (
    as_matrix,
    check_finite,
    column_norms,
    finite_diff_grad,
    frobenius_norm,
    matmul,
    relative_error,
    row_norms,
)


class TestMatrix:
    def test_as_matrix_coerces_lists(self):
        m = as_matrix([[1, 2], [3, 4]])

        assert m.dtype == np.float64
        assert m.shape == (2, 2)

    def test_as_matrix_rejects_vectors(self):
        with pytest.raises(DimensionError, match="weights: expected a 2-D matrix"):
            as_matrix([1.0, 2.0], "weights")

    def test_check_finite_counts_bad_entries(self):
        with pytest.raises(NumericalError, match="2 non-finite entries"):
            check_finite(np.array([1.0, np.inf, np.nan]))

    def test_matmul_shape_check(self):
        with pytest.raises(DimensionError, match=r"\(2, 3\) by \(2, 3\)"):
            matmul(np.ones((2, 3)), np.ones((2, 3)))

    def test_norms(self):
        a = np.array([[3.0, 0.0], [4.0, 0.0]])

        np.testing.assert_array_equal(column_norms(a), [5.0, 0.0])
        np.testing.assert_array_equal(row_norms(a), [3.0, 4.0])
        assert frobenius_norm(a) == 5.0

    def test_frobenius_norm_of_any_rank(self):
        assert frobenius_norm(np.zeros((3, 3))) == 0.0
        assert frobenius_norm(np.full((2, 2, 2), 0.5)) == np.sqrt(2.0)


class TestFiniteDifferences:
    def test_quadratic(self):
        x = np.array([[1.0, -2.0], [0.5, 3.0]])

        grad = finite_diff_grad(lambda v: float(np.sum(v**2)), x)

        np.testing.assert_allclose(grad, 2 * x, atol=1e-8)

    def test_does_not_mutate_input(self):
        x = np.array([1.0, 2.0])

        finite_diff_grad(lambda v: float(v.sum()), x)

        np.testing.assert_array_equal(x, [1.0, 2.0])

    def test_step_must_be_positive(self):
        with pytest.raises(ContractError):
            finite_diff_grad(lambda v: 0.0, np.zeros(2), h=0.0)

    def test_relative_error_falls_back_to_absolute(self):
        assert relative_error(np.zeros(2), np.full(2, 1e-12)) < 1e-11
        assert relative_error(np.ones(2), 2 * np.ones(2)) == pytest.approx(0.5)
