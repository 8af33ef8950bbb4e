"""GRPO, DAPO and Dr. GRPO objectives.

All three share the clipped importance-ratio surrogate
``min(ratio * A, clip(ratio, 1 - eps_low, 1 + eps_high) * A)``; they differ
in the advantage (Dr. GRPO drops the std division), the clip bounds (DAPO
raises only the upper one), the per-response normaliser (Dr. GRPO uses a
fixed 1/L_max instead of 1/|o_i|) and DAPO's filtering of groups whose
rewards are all equal. No KL term is used.
"""

from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np
import numpy.typing as npt

from ..config import (
    DEFAULT_EPS_HIGH_DAPO,
    DEFAULT_EPS_LOW,
    DEFAULT_STD_FLOOR,
    PAD_TOKEN,
)
from ..errors import ConfigError, ContractError
from ..tensor import Node, Vector
from ..tensor import autodiff as ad


class Variant(StrEnum):
    GRPO = "GRPO"
    DAPO = "DAPO"
    DR_GRPO = "DrGRPO"


@dataclass(frozen=True)
class SurrogateParams:
    variant: Variant = Variant.GRPO
    eps_low: float = DEFAULT_EPS_LOW
    eps_high: float = DEFAULT_EPS_LOW
    std_floor: float = DEFAULT_STD_FLOOR
    max_completion_len: int = 8

    def __post_init__(self) -> None:
        if not isinstance(self.variant, Variant):
            try:
                object.__setattr__(self, "variant", Variant(self.variant))
            except ValueError as e:
                raise ConfigError(
                    f"rlvr.variant: unknown variant {self.variant!r}"
                ) from e
        if not 0 < self.eps_low <= self.eps_high < 1:
            raise ConfigError(
                f"rlvr.eps_low/eps_high: need 0 < eps_low <= eps_high < 1, "
                f"got {self.eps_low}, {self.eps_high}"
            )
        if self.variant is Variant.GRPO and self.eps_low != self.eps_high:
            raise ConfigError(
                f"rlvr.eps_high: GRPO clips symmetrically, "
                f"got {self.eps_low} != {self.eps_high}"
            )
        if self.std_floor <= 0:
            raise ConfigError(f"rlvr.std_floor: must be positive, got {self.std_floor}")
        if self.max_completion_len < 1:
            raise ConfigError(
                f"rlvr.max_completion_len: must be >= 1, got {self.max_completion_len}"
            )

    @classmethod
    def for_variant(
        cls, variant: Variant | str, max_completion_len: int = 8
    ) -> "SurrogateParams":
        """Default clip bounds: symmetric 0.2, or (0.2, 0.28) for DAPO."""
        variant = Variant(variant)
        eps_high = DEFAULT_EPS_HIGH_DAPO if variant is Variant.DAPO else DEFAULT_EPS_LOW
        return cls(
            variant=variant,
            eps_low=DEFAULT_EPS_LOW,
            eps_high=eps_high,
            max_completion_len=max_completion_len,
        )


@dataclass(frozen=True)
class RolloutGroup:
    """One prompt's G completions with binary rewards and sampling log-probs."""

    prompt: tuple[int, ...]
    completions: tuple[tuple[int, ...], ...]
    rewards: tuple[int, ...]
    old_log_probs: tuple[Vector, ...] = field(repr=False)

    def __post_init__(self) -> None:
        size = len(self.completions)
        if size < 2:
            raise ContractError(f"rollout group needs G >= 2 completions, got {size}")
        if len(self.rewards) != size or len(self.old_log_probs) != size:
            raise ContractError(
                f"rollout group sizes disagree: {size} completions, "
                f"{len(self.rewards)} rewards, {len(self.old_log_probs)} log-prob rows"
            )
        if any(r not in (0, 1) for r in self.rewards):
            raise ContractError(f"rollout rewards must be 0 or 1, got {self.rewards}")
        pairs = zip(self.completions, self.old_log_probs, strict=True)
        for i, (tokens, lp) in enumerate(pairs):
            if len(lp) != len(tokens):
                raise ContractError(
                    f"completion {i}: {len(tokens)} tokens but {len(lp)} old log-probs"
                )

    @property
    def size(self) -> int:
        return len(self.completions)

    @property
    def lengths(self) -> npt.NDArray[np.int64]:
        return np.array([len(c) for c in self.completions], dtype=np.int64)

    @property
    def width(self) -> int:
        """Padded completion width (at least one column)."""
        return max(1, int(self.lengths.max()))

    def padded(self) -> tuple[npt.NDArray[np.int64], Vector, Vector]:
        """(tokens, old log-probs, mask), each (G, width), right-padded."""
        tokens = np.full((self.size, self.width), PAD_TOKEN, dtype=np.int64)
        old = np.zeros((self.size, self.width))
        mask = np.zeros((self.size, self.width))
        pairs = zip(self.completions, self.old_log_probs, strict=True)
        for i, (c, lp) in enumerate(pairs):
            tokens[i, : len(c)] = c
            old[i, : len(c)] = lp
            mask[i, : len(c)] = 1.0
        return tokens, old, mask


def group_advantages(
    rewards: npt.ArrayLike, variant: Variant, std_floor: float = DEFAULT_STD_FLOOR
) -> Vector:
    """Standardised (GRPO, DAPO) or centred-only (Dr. GRPO) group advantages.

    The std is the population std, floored at ``std_floor`` so an all-equal
    group yields zero advantages.
    """
    r = np.asarray(rewards, dtype=np.float64)
    centred = r - r.mean()
    if Variant(variant) is Variant.DR_GRPO:
        return centred
    return centred / max(float(r.std()), std_floor)


def clipped_surrogate(ratio: float, adv: float, params: SurrogateParams) -> float:
    if ratio <= 0:
        raise ContractError(f"clipped_surrogate: ratio must be positive, got {ratio}")
    clipped = min(max(ratio, 1.0 - params.eps_low), 1.0 + params.eps_high)
    return min(ratio * adv, clipped * adv)


def dynamic_filter(groups: Sequence[RolloutGroup]) -> list[RolloutGroup]:
    """Drop groups whose rewards are all equal; survivors keep their order."""
    return [g for g in groups if len(set(g.rewards)) > 1]


def response_contributions(
    group: RolloutGroup,
    new_log_probs: Node,
    params: SurrogateParams,
    advantages: Vector | None = None,
) -> Node:
    """Per-response normalised surrogate sums, shape (G,)."""
    _, old, mask = group.padded()
    if new_log_probs.shape != old.shape:
        raise ContractError(
            f"batch_loss: new log-probs {new_log_probs.shape} do not match "
            f"group completions {old.shape}"
        )
    if advantages is None:
        advantages = group_advantages(group.rewards, params.variant, params.std_floor)
    adv = np.asarray(advantages, dtype=np.float64)[:, None]

    ratio = ad.exp((new_log_probs - old) * mask)
    surrogate = ad.minimum(
        ratio * adv,
        ad.clip(ratio, 1.0 - params.eps_low, 1.0 + params.eps_high) * adv,
    )
    totals = ad.sum(surrogate * mask, axis=1)
    if params.variant is Variant.DR_GRPO:
        return totals * (1.0 / params.max_completion_len)
    return totals / np.maximum(group.lengths, 1).astype(np.float64)


def batch_loss(
    groups: Sequence[RolloutGroup],
    new_log_probs: Sequence[Node],
    params: SurrogateParams,
) -> Node:
    """Negated objective: mean over groups of the per-group mean contribution."""
    if len(groups) != len(new_log_probs):
        raise ContractError(
            f"batch_loss: {len(groups)} groups but {len(new_log_probs)} log-prob blocks"
        )
    if not groups:
        raise ContractError("batch_loss: no groups")
    terms = [
        ad.mean(response_contributions(group, lp, params))
        for group, lp in zip(groups, new_log_probs, strict=True)
    ]
    total = terms[0]
    for term in terms[1:]:
        total = total + term
    return total * (-1.0 / len(groups))
