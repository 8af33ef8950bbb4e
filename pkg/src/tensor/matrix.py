"""Dense float64 matrix helpers.

A Matrix is a two-dimensional float64 numpy array; vectors are
one-dimensional. Public helpers validate shapes and reject non-finite
payloads so that every published value is finite.
"""

import numpy as np
import numpy.typing as npt

from ..errors import DimensionError, NumericalError

Matrix = npt.NDArray[np.float64]
Vector = npt.NDArray[np.float64]


def as_matrix(data: npt.ArrayLike, name: str = "matrix") -> Matrix:
    """Coerce ``data`` into a finite two-dimensional float64 array."""
    a = np.array(data, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"{name}: expected a 2-D matrix, got shape {a.shape}")
    check_finite(a, name)
    return a


def check_finite(a: npt.NDArray[np.float64], name: str = "matrix") -> None:
    """Raise NumericalError when ``a`` holds a NaN or an infinity."""
    if not np.all(np.isfinite(a)):
        bad = int(np.size(a) - np.count_nonzero(np.isfinite(a)))
        raise NumericalError(f"{name}: {bad} non-finite entries")


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """Standard matrix product with a shape check naming both operands."""
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    return a @ b


def frobenius_norm(a: npt.NDArray[np.float64]) -> float:
    """sqrt of the sum of squared entries, for an array of any rank."""
    return float(np.sqrt(np.sum(np.square(a))))


def column_norms(a: Matrix) -> Vector:
    """Per-column Euclidean norms; a zero column yields a zero entry."""
    if a.ndim != 2:
        raise DimensionError(f"column_norms: expected a 2-D matrix, got {a.shape}")
    return np.sqrt(np.sum(np.square(a), axis=0))


def row_norms(a: Matrix) -> Vector:
    """Per-row Euclidean norms (the column norms of ``a.T``)."""
    return column_norms(a.T)
