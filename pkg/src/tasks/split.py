"""Held-out evaluation prompts and a training stream that never meets them.

Every family's prompt space is finite and indexable: ModAdd prompts are
``a * p + b`` and digit prompts read their digits as a base-10 number. A
seeded draw of distinct indices forms the held-out set; training redraws
any prompt that lands in it.
"""

import logging
from dataclasses import dataclass
from functools import cached_property

from ..config import MAX_HELD_OUT_REDRAWS, MOD_ADD_MODULI, VALUE_BASE
from ..errors import ContractError
from ..tensor import Rng
from .generators import (
    TaskId,
    TaskInstance,
    digit_sum_instance,
    gen_instance,
    max_difficulty,
    mod_add_instance,
    reverse_instance,
)

logger = logging.getLogger(__name__)


def _digit_count(task_id: TaskId, difficulty: int) -> int:
    return difficulty + 1 if task_id is TaskId.DIGIT_SUM else difficulty


def space_size(task_id: TaskId, difficulty: int) -> int:
    """Number of distinct prompts the family has at ``difficulty``."""
    if not 1 <= difficulty <= max_difficulty(task_id):
        raise ContractError(f"{task_id}: no prompt space at difficulty {difficulty}")
    if task_id is TaskId.MOD_ADD:
        return MOD_ADD_MODULI[difficulty - 1] ** 2
    return 10 ** _digit_count(task_id, difficulty)


def instance_at(task_id: TaskId, difficulty: int, index: int) -> TaskInstance:
    size = space_size(task_id, difficulty)
    if not 0 <= index < size:
        raise ContractError(f"{task_id}: prompt index {index} outside [0, {size})")
    if task_id is TaskId.MOD_ADD:
        p = MOD_ADD_MODULI[difficulty - 1]
        return mod_add_instance(index // p, index % p, p, difficulty)
    digits = [int(d) for d in str(index).zfill(_digit_count(task_id, difficulty))]
    if task_id is TaskId.DIGIT_SUM:
        return digit_sum_instance(digits, difficulty)
    return reverse_instance(digits, difficulty)


def index_of(instance: TaskInstance) -> int:
    """Inverse of ``instance_at``."""
    if instance.task_id is TaskId.MOD_ADD:
        _, a, _, b, _, p = (t - VALUE_BASE for t in instance.prompt)
        return a * p + b
    index = 0
    for token in instance.prompt[2:]:
        index = index * 10 + token - VALUE_BASE
    return index


@dataclass(frozen=True)
class HeldOutSplit:
    task_id: TaskId
    difficulty: int
    order: tuple[int, ...]

    @classmethod
    def draw(
        cls, task_id: TaskId, difficulty: int, instances: int, rng: Rng
    ) -> "HeldOutSplit":
        """Hold out ``instances`` prompts, capped at half the prompt space."""
        size = space_size(task_id, difficulty)
        count = min(instances, size // 2)
        if count < instances:
            logger.warning(
                "%s difficulty %d has %d prompts; holding out %d instead of %d",
                task_id,
                difficulty,
                size,
                count,
                instances,
            )
        return cls(task_id, difficulty, tuple(rng.distinct(size, count)))

    def __len__(self) -> int:
        return len(self.order)

    def __contains__(self, instance: object) -> bool:
        return (
            isinstance(instance, TaskInstance)
            and instance.task_id is self.task_id
            and instance.difficulty == self.difficulty
            and index_of(instance) in self._members
        )

    @cached_property
    def _members(self) -> frozenset[int]:
        return frozenset(self.order)

    def eval_instances(self) -> list[TaskInstance]:
        return [instance_at(self.task_id, self.difficulty, i) for i in self.order]

    def train_instance(self, rng: Rng) -> TaskInstance:
        """``gen_instance`` redrawn from ``rng`` until it misses the held-out set."""
        for _ in range(MAX_HELD_OUT_REDRAWS):
            instance = gen_instance(self.task_id, self.difficulty, rng)
            if instance not in self:
                return instance
        raise ContractError(
            f"{self.task_id}: no training prompt outside the held-out set after "
            f"{MAX_HELD_OUT_REDRAWS} draws"
        )
