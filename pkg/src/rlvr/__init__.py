"""RLVR objectives, optimizer and the training step."""

from .objective import (
    RolloutGroup,
    SurrogateParams,
    Variant,
    batch_loss,
    clipped_surrogate,
    dynamic_filter,
    group_advantages,
    response_contributions,
)
from .optim import (
    OptimizerState,
    adam_step,
    clip_grad_norm,
    global_norm,
    make_optimizer,
)
from .probe import ProbeResult, principal_gradient_probe, probe_weight
from .train import StepReport, TrainSettings, collect_groups, delta_norms, train_step
from .warmstart import WarmStartSettings, pretrain_format

__all__ = [
    "OptimizerState",
    "ProbeResult",
    "RolloutGroup",
    "StepReport",
    "SurrogateParams",
    "TrainSettings",
    "Variant",
    "WarmStartSettings",
    "adam_step",
    "batch_loss",
    "clip_grad_norm",
    "clipped_surrogate",
    "collect_groups",
    "delta_norms",
    "dynamic_filter",
    "global_norm",
    "group_advantages",
    "make_optimizer",
    "pretrain_format",
    "principal_gradient_probe",
    "probe_weight",
    "response_contributions",
    "train_step",
]
