"""One on-policy RLVR step: sample groups, score, build the variant loss, update."""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from ..adapters import (
    VECTOR_KINDS,
    AdaLoRASchedule,
    AdaLoRAState,
    AdapterKind,
    adalora_prune,
    merge_delta,
    orthogonality_penalty,
)
from ..config import DEFAULT_GROUP_SIZE, DEFAULT_LEARNING_RATE, DEFAULT_MAX_GRAD_NORM
from ..errors import ConfigError, ContractError, NumericalError
from ..policy import PolicyNet, completion_log_probs, sample_completions
from ..tasks import TaskInstance, verify
from ..tensor import Node, Rng, backward, frobenius_norm
from .objective import (
    RolloutGroup,
    SurrogateParams,
    Variant,
    batch_loss,
    dynamic_filter,
)
from .optim import OptimizerState, adam_step, clip_grad_norm

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainSettings:
    group_size: int = DEFAULT_GROUP_SIZE
    learning_rate: float = DEFAULT_LEARNING_RATE
    max_new: int = 8
    temperature: float = 1.0
    top_p: float = 1.0
    max_grad_norm: float = DEFAULT_MAX_GRAD_NORM
    adalora_target_rank: int = 1
    adalora_schedule: AdaLoRASchedule | None = None

    def __post_init__(self) -> None:
        if self.group_size < 2:
            raise ConfigError(f"train.group_size: must be >= 2, got {self.group_size}")
        if self.learning_rate <= 0:
            raise ConfigError(
                f"train.learning_rate: must be positive, got {self.learning_rate}"
            )
        if self.max_new < 1:
            raise ConfigError(f"train.max_new: must be >= 1, got {self.max_new}")
        if self.temperature < 0 or not 0 < self.top_p <= 1:
            raise ConfigError(
                "train.temperature/top_p: need temperature >= 0, 0 < top_p <= 1"
            )
        if self.adalora_target_rank < 0:
            raise ConfigError("train.adalora_target_rank: must be >= 0")


@dataclass(frozen=True)
class StepReport:
    step: int
    mean_reward: float
    loss: float
    grad_norm: float
    groups_kept: int
    skipped: bool
    delta_norms: dict[str, float] = field(default_factory=dict)


def collect_groups(
    net: PolicyNet,
    prompts: Sequence[TaskInstance],
    settings: TrainSettings,
    rng: Rng,
) -> list[RolloutGroup]:
    """Sample and score ``group_size`` completions per prompt."""
    groups = []
    for j, instance in enumerate(prompts):
        rngs = [rng.substream(f"rollout-{j}", i) for i in range(settings.group_size)]
        samples = sample_completions(
            net,
            instance.prompt,
            rngs,
            settings.temperature,
            settings.top_p,
            settings.max_new,
        )
        groups.append(
            RolloutGroup(
                prompt=instance.prompt,
                completions=tuple(s.tokens for s in samples),
                rewards=tuple(verify(s.tokens, instance) for s in samples),
                old_log_probs=tuple(s.log_probs for s in samples),
            )
        )
    return groups


def delta_norms(net: PolicyNet) -> dict[str, float]:
    """||ΔW||_F per projection; empty for kinds without a weight delta."""
    if net.adapter_cfg is None or net.adapter_cfg.kind in VECTOR_KINDS:
        return {}
    return {
        layer.name: frobenius_norm(merge_delta(layer))
        for layer in net.linear_layers()
    }


def train_step(
    net: PolicyNet,
    prompts: Sequence[TaskInstance],
    params: SurrogateParams,
    settings: TrainSettings,
    rng: Rng,
    optimizer: OptimizerState,
    step: int = 0,
) -> StepReport:
    """Run one RLVR update; ``rng`` should be unique to this step.

    The policy that samples is the policy at step start, so its log-probs
    serve as the old-policy terms of the importance ratio.
    """
    if not prompts:
        raise ContractError("train_step: empty prompt batch")

    groups = collect_groups(net, prompts, settings, rng.substream("rollout"))
    mean_reward = float(np.mean([r for g in groups for r in g.rewards]))
    kept = dynamic_filter(groups) if params.variant is Variant.DAPO else groups

    if not kept:
        logger.info("step %d: every group has equal rewards, update skipped", step)
        return StepReport(step, mean_reward, 0.0, 0.0, 0, True, delta_norms(net))

    net.zero_grad()
    new_log_probs = [
        completion_log_probs(
            net,
            g.prompt,
            g.padded()[0],
            training=True,
            rng=rng.substream("dropout", j),
        )
        for j, g in enumerate(kept)
    ]
    loss = batch_loss(kept, new_log_probs, params)
    loss = _add_orthogonality(net, loss)
    if not np.isfinite(loss.value):
        raise NumericalError(f"step {step}: non-finite loss {float(loss.value)!r}")
    backward(loss)

    grads = {
        name: node.grad for group in optimizer.groups for name, node in group.params
    }
    clipped, grad_norm = clip_grad_norm(grads, settings.max_grad_norm)
    adam_step(optimizer, clipped)
    _prune_adalora(net, settings, step)

    return StepReport(
        step=step,
        mean_reward=mean_reward,
        loss=float(loss.value),
        grad_norm=grad_norm,
        groups_kept=len(kept),
        skipped=False,
        delta_norms=delta_norms(net),
    )


def _adalora_states(net: PolicyNet) -> list[AdaLoRAState]:
    if net.adapter_cfg is None or net.adapter_cfg.kind is not AdapterKind.ADALORA:
        return []
    return [
        layer.state
        for layer in net.linear_layers()
        if isinstance(layer.state, AdaLoRAState)
    ]


def _add_orthogonality(net: PolicyNet, loss: Node) -> Node:
    states = _adalora_states(net)
    weight = net.adapter_cfg.adalora_orth_reg if net.adapter_cfg is not None else 0.0
    if not states or weight == 0.0:
        return loss
    for state in states:
        loss = loss + orthogonality_penalty(state) * weight
    return loss


def _prune_adalora(net: PolicyNet, settings: TrainSettings, step: int) -> None:
    if settings.adalora_schedule is None:
        return
    for state in _adalora_states(net):
        adalora_prune(
            state, settings.adalora_target_rank, step, settings.adalora_schedule
        )
