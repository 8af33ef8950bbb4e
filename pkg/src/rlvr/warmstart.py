"""Format warm-start for the base policy.

Teacher-forced cross-entropy on completions ``ANS v... EOS`` whose values
are uniform distractors (twice the answer range by default), so the base
policy learns the strict answer format but not the answers themselves.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..adapters import AdapterConfig, AdapterKind
from ..config import ANSWER_TOKEN, EOS_TOKEN, VALUE_BASE
from ..errors import ConfigError
from ..policy import PolicyNet, span_log_probs
from ..tasks import TaskId, answer_length, answer_values, gen_instance, value_token
from ..tensor import Rng, backward
from ..tensor import autodiff as ad
from .optim import adam_step, clip_grad_norm, make_optimizer

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WarmStartSettings:
    steps: int = 0
    lr: float = 3e-3
    batch_size: int = 16
    answer_span: int | None = None

    def __post_init__(self) -> None:
        if self.steps < 0:
            raise ConfigError(f"warmstart.steps: must be >= 0, got {self.steps}")
        if self.lr <= 0:
            raise ConfigError(f"warmstart.lr: must be positive, got {self.lr}")
        if self.batch_size < 1:
            raise ConfigError(
                f"warmstart.batch_size: must be >= 1, got {self.batch_size}"
            )
        if self.answer_span is not None and self.answer_span < 1:
            raise ConfigError(
                f"warmstart.answer_span: must be >= 1, got {self.answer_span}"
            )


def pretrain_format(
    net: PolicyNet,
    task_id: TaskId,
    difficulty: int,
    settings: WarmStartSettings,
    rng: Rng,
) -> list[float]:
    """Fit every base tensor to the answer format; returns the loss per step."""
    if settings.steps == 0:
        return []
    span = settings.answer_span or min(
        2 * answer_values(task_id, difficulty), net.cfg.vocab - VALUE_BASE
    )
    width = answer_length(task_id, difficulty)
    optimizer = make_optimizer(net, settings.lr, AdapterConfig(kind=AdapterKind.FULL))

    losses = []
    for step in range(settings.steps):
        step_rng = rng.substream("warmstart", step)
        rows = []
        for b in range(settings.batch_size):
            instance = gen_instance(task_id, difficulty, step_rng.substream("task", b))
            distractors = [
                value_token(step_rng.integers(0, span)) for _ in range(width)
            ]
            rows.append([*instance.prompt, ANSWER_TOKEN, *distractors, EOS_TOKEN])
        tokens = np.asarray(rows, dtype=np.int64)
        start = tokens.shape[1] - width - 2

        net.zero_grad()
        loss = ad.mean(span_log_probs(net, tokens, start)) * -1.0
        backward(loss)
        grads = {
            name: node.grad for group in optimizer.groups for name, node in group.params
        }
        clipped, _ = clip_grad_norm(grads, 1.0)
        adam_step(optimizer, clipped)
        losses.append(float(loss.value))
        if (step + 1) % 50 == 0:
            logger.info(
                "warm-start step %d/%d: loss %.4f", step + 1, settings.steps, losses[-1]
            )
    return losses
