"""Thin singular value decomposition by one-sided (Hestenes) Jacobi rotations.

For an m x n matrix the routine returns ``U`` (m x k), ``S`` (k,) and
``V`` (n x k) with k = min(m, n), so that ``a == U @ diag(S) @ V.T``.
Singular values are sorted descending and each left singular vector has
its largest-magnitude entry positive, with the matching right vector
flipped alongside.
"""

import logging

import numpy as np
import numpy.typing as npt

from ..config import SVD_MAX_SWEEPS, SVD_TOLERANCE
from ..errors import DimensionError, NumericalError
from .matrix import Matrix, Vector, check_finite

logger = logging.getLogger(__name__)


def svd(
    a: npt.ArrayLike,
    max_sweeps: int = SVD_MAX_SWEEPS,
    tolerance: float = SVD_TOLERANCE,
) -> tuple[Matrix, Vector, Matrix]:
    """Decompose ``a`` into ``(U, S, V)``.

    Args:
        a: Non-empty two-dimensional matrix
        max_sweeps: Cap on full passes over all column pairs
        tolerance: Pair (p, q) counts as orthogonal once
            |<a_p, a_q>| <= tolerance * ||a_p|| * ||a_q||

    Returns:
        Tuple of (U, S, V) with column-orthonormal U and V

    Raises:
        DimensionError: If ``a`` is not a non-empty 2-D matrix
        NumericalError: If ``a`` holds non-finite values or the sweeps
            do not converge within ``max_sweeps``
    """
    work = np.array(a, dtype=np.float64)
    if work.ndim != 2 or work.size == 0:
        raise DimensionError(f"svd: expected a non-empty 2-D matrix, got {work.shape}")
    check_finite(work, "svd input")

    rows, cols = work.shape
    if rows < cols:
        v, s, u = _one_sided_jacobi(work.T, max_sweeps, tolerance)
    else:
        u, s, v = _one_sided_jacobi(work, max_sweeps, tolerance)

    # Deterministic sign: the largest-magnitude entry of each U column is positive
    pivots = np.argmax(np.abs(u), axis=0)
    signs = np.where(u[pivots, np.arange(u.shape[1])] < 0.0, -1.0, 1.0)
    return u * signs, s, v * signs


def _one_sided_jacobi(
    a: Matrix, max_sweeps: int, tolerance: float
) -> tuple[Matrix, Vector, Matrix]:
    """Jacobi SVD for a tall (rows >= cols) matrix."""
    rows, cols = a.shape
    # Rows of ``g`` are working-matrix columns; rows of ``vt`` are columns of V
    g = a.T.copy()
    vt = np.eye(cols)

    for sweep in range(1, max_sweeps + 1):
        rotated = False
        for p in range(cols - 1):
            for q in range(p + 1, cols):
                alpha = float(g[p] @ g[p])
                beta = float(g[q] @ g[q])
                gamma = float(g[p] @ g[q])
                if gamma == 0.0 or abs(gamma) <= tolerance * np.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = np.copysign(1.0, zeta) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                g[p], g[q] = c * g[p] - s * g[q], s * g[p] + c * g[q]
                vt[p], vt[q] = c * vt[p] - s * vt[q], s * vt[p] + c * vt[q]
        if not rotated:
            logger.debug("svd: %dx%d converged after %d sweeps", rows, cols, sweep)
            break
    else:
        raise NumericalError(f"svd: no convergence after {max_sweeps} sweeps")

    sigma = np.sqrt(np.sum(np.square(g), axis=1))
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    g = g[order]
    vt = vt[order]

    # Numerically zero singular values carry no direction; complete the basis
    scale = sigma[0] if sigma[0] > 0 else 1.0
    floor = np.finfo(np.float64).eps * max(rows, cols) * scale
    live = sigma > floor
    u = np.zeros((rows, cols))
    u[:, live] = (g[live] / sigma[live, None]).T
    if not np.all(live):
        u = _complete_basis(u, live)
    return u, sigma, vt.T


def _complete_basis(u: Matrix, live: npt.NDArray[np.bool_]) -> Matrix:
    """Fill the dead columns of ``u`` with orthonormal vectors via Gram-Schmidt."""
    rows = u.shape[0]
    basis = [u[:, j] for j in np.flatnonzero(live)]
    candidates = iter(np.eye(rows))
    for j in np.flatnonzero(~live):
        for e in candidates:
            w = e.copy()
            for _ in range(2):
                for b in basis:
                    w -= (b @ w) * b
            norm = np.linalg.norm(w)
            if norm > 0.5:
                w /= norm
                u[:, j] = w
                basis.append(w)
                break
    return u
