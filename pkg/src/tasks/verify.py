"""Binary exact-match reward."""

from collections.abc import Sequence

from ..config import ANSWER_TOKEN, EOS_TOKEN
from .generators import TaskInstance


def extract_answer(completion: Sequence[int]) -> tuple[int, ...] | None:
    """Tokens between the first ANS and the first EOS after it; None if malformed."""
    tokens = list(completion)
    try:
        start = tokens.index(ANSWER_TOKEN)
        end = tokens.index(EOS_TOKEN, start + 1)
    except ValueError:
        return None
    return tuple(tokens[start + 1 : end])


def verify(completion: Sequence[int], instance: TaskInstance) -> int:
    """1 iff the extracted answer equals the ground truth token for token, else 0."""
    return int(extract_answer(completion) == instance.ground_truth)
