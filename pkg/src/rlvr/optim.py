"""Adam with bias correction over named parameter groups."""

import logging
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from ..adapters import AdapterConfig, ParamGroup, lr_groups
from ..adapters.accounting import HasParameters
from ..config import ADAM_BETAS, ADAM_EPS
from ..errors import NumericalError

logger = logging.getLogger(__name__)

Array = npt.NDArray[np.float64]


@dataclass
class OptimizerState:
    groups: list[ParamGroup]
    betas: tuple[float, float] = ADAM_BETAS
    eps: float = ADAM_EPS
    step: int = 0
    first_moment: dict[str, Array] = field(default_factory=dict)
    second_moment: dict[str, Array] = field(default_factory=dict)


def make_optimizer(
    model: HasParameters, base_lr: float, cfg: AdapterConfig
) -> OptimizerState:
    groups = lr_groups(model, base_lr, cfg)
    for group in groups:
        logger.debug("lr group %.3g: %d tensors", group.lr, len(group.params))
    return OptimizerState(groups=groups)


def global_norm(grads: Mapping[str, Array]) -> float:
    return float(np.sqrt(sum(float(np.sum(np.square(g))) for g in grads.values())))


def clip_grad_norm(
    grads: Mapping[str, Array], max_norm: float
) -> tuple[dict[str, Array], float]:
    """Rescale so the global norm is at most ``max_norm``; returns the pre-clip norm."""
    norm = global_norm(grads)
    if max_norm <= 0 or norm <= max_norm:
        return dict(grads), norm
    factor = max_norm / norm
    return {name: g * factor for name, g in grads.items()}, norm


def adam_step(state: OptimizerState, grads: Mapping[str, Array]) -> None:
    """One bias-corrected Adam update of every trainable parameter in ``state``.

    Parameters without an entry in ``grads`` take a zero gradient. Frozen
    tensors are never touched.

    Raises:
        NumericalError: If a gradient holds NaN or an infinity
    """
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"non-finite gradient for parameter {name}")

    state.step += 1
    beta1, beta2 = state.betas
    correction1 = 1.0 - beta1**state.step
    correction2 = 1.0 - beta2**state.step
    for group in state.groups:
        for name, node in group.params:
            if not node.requires_grad:
                continue
            g = grads.get(name)
            if g is None:
                g = np.zeros_like(node.value)
            m = state.first_moment.get(name, np.zeros_like(node.value))
            v = state.second_moment.get(name, np.zeros_like(node.value))
            m = beta1 * m + (1.0 - beta1) * g
            v = beta2 * v + (1.0 - beta2) * np.square(g)
            state.first_moment[name] = m
            state.second_moment[name] = v
            update = (m / correction1) / (np.sqrt(v / correction2) + state.eps)
            node.value = node.value - group.lr * update
