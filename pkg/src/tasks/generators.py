"""Synthetic task families with deterministic ground truth.

Prompts open with BOS and a family-specific layout; the policy is expected
to answer ``ANS v... EOS`` with the ground-truth value tokens.

    ModAdd    BOS a PLUS b MOD p      -> (a + b) mod p
    DigitSum  BOS SUM d1 ... dn       -> d1 + ... + dn
    Reverse   BOS REV d1 ... dn       -> dn ... d1
"""

from collections.abc import Sequence
from dataclasses import dataclass
from enum import StrEnum

from ..config import (
    BOS_TOKEN,
    MAX_DIGIT_SUM_DIFFICULTY,
    MAX_REVERSE_DIFFICULTY,
    MOD_ADD_MODULI,
    MOD_TOKEN,
    PLUS_TOKEN,
    REVERSE_TOKEN,
    SUM_TOKEN,
    VALUE_BASE,
)
from ..errors import ContractError
from ..tensor import Rng


class TaskId(StrEnum):
    MOD_ADD = "ModAdd"
    DIGIT_SUM = "DigitSum"
    REVERSE = "Reverse"


@dataclass(frozen=True)
class TaskInstance:
    prompt: tuple[int, ...]
    ground_truth: tuple[int, ...]
    task_id: TaskId
    difficulty: int


def value_token(v: int) -> int:
    return VALUE_BASE + v


def mod_add_instance(a: int, b: int, p: int, difficulty: int = 1) -> TaskInstance:
    if not (0 <= a < p and 0 <= b < p):
        raise ContractError(f"mod_add: operands {a}, {b} must lie in [0, {p})")
    return TaskInstance(
        prompt=(
            BOS_TOKEN,
            value_token(a),
            PLUS_TOKEN,
            value_token(b),
            MOD_TOKEN,
            value_token(p),
        ),
        ground_truth=(value_token((a + b) % p),),
        task_id=TaskId.MOD_ADD,
        difficulty=difficulty,
    )


def digit_sum_instance(digits: Sequence[int], difficulty: int = 1) -> TaskInstance:
    _check_digits(digits)
    return TaskInstance(
        prompt=(BOS_TOKEN, SUM_TOKEN, *(value_token(d) for d in digits)),
        ground_truth=(value_token(sum(digits)),),
        task_id=TaskId.DIGIT_SUM,
        difficulty=difficulty,
    )


def reverse_instance(digits: Sequence[int], difficulty: int = 1) -> TaskInstance:
    _check_digits(digits)
    return TaskInstance(
        prompt=(BOS_TOKEN, REVERSE_TOKEN, *(value_token(d) for d in digits)),
        ground_truth=tuple(value_token(d) for d in reversed(digits)),
        task_id=TaskId.REVERSE,
        difficulty=difficulty,
    )


def _check_digits(digits: Sequence[int]) -> None:
    if not digits or any(not 0 <= d <= 9 for d in digits):
        raise ContractError(
            f"expected a non-empty run of digits 0-9, got {list(digits)}"
        )


def max_difficulty(task_id: TaskId) -> int:
    return {
        TaskId.MOD_ADD: len(MOD_ADD_MODULI),
        TaskId.DIGIT_SUM: MAX_DIGIT_SUM_DIFFICULTY,
        TaskId.REVERSE: MAX_REVERSE_DIFFICULTY,
    }[task_id]


def prompt_length(task_id: TaskId, difficulty: int) -> int:
    match task_id:
        case TaskId.MOD_ADD:
            return 6
        case TaskId.DIGIT_SUM:
            return 2 + difficulty + 1
        case TaskId.REVERSE:
            return 2 + difficulty


def answer_length(task_id: TaskId, difficulty: int) -> int:
    return difficulty if task_id is TaskId.REVERSE else 1


def answer_values(task_id: TaskId, difficulty: int) -> int:
    """Number of distinct values an answer token can take."""
    match task_id:
        case TaskId.MOD_ADD:
            return MOD_ADD_MODULI[difficulty - 1]
        case TaskId.DIGIT_SUM:
            return 9 * (difficulty + 1) + 1
        case TaskId.REVERSE:
            return 10


def required_vocab(task_id: TaskId, difficulty: int) -> int:
    """Smallest vocab that holds every value token the family can emit."""
    match task_id:
        case TaskId.MOD_ADD:
            largest = MOD_ADD_MODULI[difficulty - 1]
        case TaskId.DIGIT_SUM:
            largest = 9 * (difficulty + 1)
        case TaskId.REVERSE:
            largest = 9
    return value_token(largest) + 1


def gen_instance(task_id: TaskId, difficulty: int, rng: Rng) -> TaskInstance:
    """Draw one instance, deterministic in (task, difficulty, rng state)."""
    if not 1 <= difficulty <= max_difficulty(task_id):
        raise ContractError(
            f"{task_id} difficulty must lie in [1, {max_difficulty(task_id)}], "
            f"got {difficulty}"
        )
    match task_id:
        case TaskId.MOD_ADD:
            p = MOD_ADD_MODULI[difficulty - 1]
            return mod_add_instance(
                rng.integers(0, p), rng.integers(0, p), p, difficulty
            )
        case TaskId.DIGIT_SUM:
            digits = [rng.integers(0, 10) for _ in range(difficulty + 1)]
            return digit_sum_instance(digits, difficulty)
        case TaskId.REVERSE:
            digits = [rng.integers(0, 10) for _ in range(difficulty)]
            return reverse_instance(digits, difficulty)
