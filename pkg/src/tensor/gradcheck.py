"""Finite-difference gradient oracle used to check the autodiff rules."""

from collections.abc import Callable, Mapping

import numpy as np
import numpy.typing as npt

from ..errors import ContractError
from .autodiff import Node, backward, no_grad

Array = npt.NDArray[np.float64]


def finite_diff_grad(
    f: Callable[[Array], float], at: npt.ArrayLike, h: float = 1e-6
) -> Array:
    """Central differences (f(x + h e_ij) - f(x - h e_ij)) / 2h for every entry."""
    if h <= 0:
        raise ContractError(f"finite_diff_grad: step must be positive, got {h}")
    x = np.array(at, dtype=np.float64)
    grad = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        original = x[idx]
        x[idx] = original + h
        forward = f(x.copy())
        x[idx] = original - h
        back = f(x.copy())
        x[idx] = original
        grad[idx] = (forward - back) / (2.0 * h)
    return grad


def relative_error(analytic: Array, numeric: Array) -> float:
    """||a - n|| / max(||a||, ||n||); the absolute error when both are tiny."""
    diff = float(np.linalg.norm(analytic - numeric))
    scale = max(float(np.linalg.norm(analytic)), float(np.linalg.norm(numeric)))
    if scale < 1e-10:
        return diff
    return diff / scale


def gradient_errors(
    loss_fn: Callable[[], Node], params: Mapping[str, Node], h: float = 1e-6
) -> dict[str, float]:
    """Compare autodiff gradients of ``loss_fn`` against finite differences.

    ``loss_fn`` must rebuild the graph from the current values of ``params``
    on every call. Returns the relative error per parameter name.
    """
    for p in params.values():
        p.zero_grad()
    backward(loss_fn())
    analytic = {name: p.grad.copy() for name, p in params.items()}

    errors: dict[str, float] = {}
    for name, p in params.items():
        original = p.value.copy()

        def evaluate(v: Array, p: Node = p) -> float:
            p.value = v
            with no_grad():
                return float(loss_fn().value)

        numeric = finite_diff_grad(evaluate, original, h)
        p.value = original
        errors[name] = relative_error(analytic[name], numeric)
    return errors
