"""Parameter-efficient adapters around frozen linear layers."""

from .accounting import (
    ParamGroup,
    lr_groups,
    parameter_counts,
    trainable_fraction,
    trainable_fraction_exact,
    unique_parameters,
)
from .adalora import AdaLoRASchedule, adalora_prune, orthogonality_penalty, rank_budget
from .config import RANKED_KINDS, VECTOR_KINDS, AdapterConfig, AdapterKind
from .init import SharedBank, make_adapter
from .layer import LinearWithAdapter, adapter_forward, layer_norm_forward, merge_delta
from .state import (
    AdaLoRAState,
    AdapterState,
    DoRAState,
    FrozenState,
    FullState,
    IA3State,
    LayerNormState,
    LowRankState,
    MiSSState,
    VeRAState,
)

__all__ = [
    "RANKED_KINDS",
    "VECTOR_KINDS",
    "AdaLoRASchedule",
    "AdaLoRAState",
    "AdapterConfig",
    "AdapterKind",
    "AdapterState",
    "DoRAState",
    "FrozenState",
    "FullState",
    "IA3State",
    "LayerNormState",
    "LinearWithAdapter",
    "LowRankState",
    "MiSSState",
    "ParamGroup",
    "SharedBank",
    "VeRAState",
    "adalora_prune",
    "adapter_forward",
    "layer_norm_forward",
    "lr_groups",
    "make_adapter",
    "merge_delta",
    "orthogonality_penalty",
    "parameter_counts",
    "rank_budget",
    "trainable_fraction",
    "trainable_fraction_exact",
    "unique_parameters",
]
