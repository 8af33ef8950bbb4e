"""Tiny decoder-only transformer policy."""

from .config import PolicyConfig
from .forward import (
    check_tokens,
    completion_log_probs,
    forward_batch,
    forward_logits,
    log_softmax,
    sequence_log_prob,
    span_log_probs,
)
from .net import Block, PolicyNet, attach_adapters, build_policy, freeze_all
from .sampling import Sample, sample_completion, sample_completions, sample_token

__all__ = [
    "Block",
    "PolicyConfig",
    "PolicyNet",
    "Sample",
    "attach_adapters",
    "build_policy",
    "check_tokens",
    "completion_log_probs",
    "forward_batch",
    "forward_logits",
    "freeze_all",
    "log_softmax",
    "sample_completion",
    "sample_completions",
    "sample_token",
    "sequence_log_prob",
    "span_log_probs",
]
