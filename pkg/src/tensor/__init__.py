"""Numeric substrate: matrices, reverse-mode autodiff, seeded RNG and SVD."""

from .autodiff import Node, backward, no_grad, parameter
from .gradcheck import finite_diff_grad, gradient_errors, relative_error
from .matrix import (
    Matrix,
    Vector,
    as_matrix,
    check_finite,
    column_norms,
    frobenius_norm,
    matmul,
    row_norms,
)
from .rng import Rng
from .svd import svd

__all__ = [
    "Matrix",
    "Node",
    "Rng",
    "Vector",
    "as_matrix",
    "backward",
    "check_finite",
    "column_norms",
    "finite_diff_grad",
    "frobenius_norm",
    "gradient_errors",
    "matmul",
    "no_grad",
    "parameter",
    "relative_error",
    "row_norms",
    "svd",
]
