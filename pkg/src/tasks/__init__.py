"""Synthetic verifiable-reward tasks."""

from .generators import (
    TaskId,
    TaskInstance,
    answer_length,
    answer_values,
    digit_sum_instance,
    gen_instance,
    max_difficulty,
    mod_add_instance,
    prompt_length,
    required_vocab,
    reverse_instance,
    value_token,
)
from .split import HeldOutSplit, index_of, instance_at, space_size
from .verify import extract_answer, verify

__all__ = [
    "HeldOutSplit",
    "TaskId",
    "TaskInstance",
    "answer_length",
    "answer_values",
    "digit_sum_instance",
    "extract_answer",
    "gen_instance",
    "index_of",
    "instance_at",
    "max_difficulty",
    "mod_add_instance",
    "prompt_length",
    "required_vocab",
    "reverse_instance",
    "space_size",
    "value_token",
    "verify",
]
