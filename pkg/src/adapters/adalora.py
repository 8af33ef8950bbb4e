"""AdaLoRA rank budgeting: cubic schedule, magnitude pruning, orthogonality penalty."""

import logging
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, ContractError, UnsupportedKindError
from ..tensor import Node
from ..tensor import autodiff as ad
from .state import AdaLoRAState, AdapterState

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AdaLoRASchedule:
    """Budget window: full rank for ``init_warmup`` steps, target rank for the
    last ``final_warmup`` steps, cubic decay in between."""

    total_steps: int
    init_warmup: int = 0
    final_warmup: int = 0

    def __post_init__(self) -> None:
        if min(self.total_steps, self.init_warmup, self.final_warmup) < 0:
            raise ConfigError("adalora: schedule steps must be non-negative")
        if self.init_warmup + self.final_warmup > self.total_steps:
            raise ConfigError(
                f"adalora: warmups {self.init_warmup}+{self.final_warmup} exceed "
                f"total_steps {self.total_steps}"
            )


def rank_budget(
    rank: int, target_rank: int, step: int, schedule: AdaLoRASchedule
) -> int:
    if step < schedule.init_warmup:
        return rank
    decay_end = schedule.total_steps - schedule.final_warmup
    if step >= decay_end:
        return target_rank
    window = decay_end - schedule.init_warmup
    remaining = 1.0 - (step - schedule.init_warmup) / window
    return int(target_rank + (rank - target_rank) * remaining**3)


def adalora_prune(
    state: AdapterState, target_rank: int, step: int, schedule: AdaLoRASchedule
) -> AdaLoRAState:
    """Mask the smallest-|lambda| entries beyond the step's rank budget.

    The mask is recomputed from all entries each call, so a pruned entry is
    revived if its magnitude climbs back into the budget.
    """
    if not isinstance(state, AdaLoRAState):
        raise UnsupportedKindError(
            f"adalora_prune: expected an AdaLoRA state, got {type(state).__name__}"
        )
    rank = state.lam.shape[0]
    if not 0 <= target_rank <= rank:
        raise ContractError(
            f"adalora_prune: target rank {target_rank} outside [0, {rank}]"
        )

    budget = rank_budget(rank, target_rank, step, schedule)
    order = np.argsort(np.abs(state.lam.value), kind="stable")
    mask = np.ones(rank)
    mask[order[: rank - budget]] = 0.0
    if not np.array_equal(mask, state.mask.value):
        logger.debug("adalora: step %d budget %d of %d", step, budget, rank)
    state.mask.value = mask
    return state


def orthogonality_penalty(state: AdaLoRAState) -> Node:
    """||P^T P - I||_F^2 + ||Q Q^T - I||_F^2."""
    eye = np.eye(state.lam.shape[0])
    p_gap = ad.matmul(state.P.T, state.P) - eye
    q_gap = ad.matmul(state.Q, state.Q.T) - eye
    return ad.sum(p_gap * p_gap) + ad.sum(q_gap * q_gap)
