"""Per-kind adapter parameter containers.

Each state exposes ``tensors()``: every tensor it owns, keyed by a short
suffix, in a fixed order. Checkpoints and accounting walk these mappings.
"""

from dataclasses import dataclass
from typing import Literal

from ..tensor import Node


@dataclass
class FrozenState:
    """No adapter: the base weight is used as-is."""

    def tensors(self) -> dict[str, Node]:
        return {}


@dataclass
class FullState:
    W: Node

    def tensors(self) -> dict[str, Node]:
        return {"W": self.W}


@dataclass
class LowRankState:
    """LoRA, rsLoRA, LoRA+, LoRA-FA, PiSSA and MiLoRA.

    ``W_res`` replaces W0 on the base path for the SVD-initialised kinds.
    """

    A: Node
    B: Node
    W_res: Node | None = None

    def tensors(self) -> dict[str, Node]:
        out = {"lora_A": self.A, "lora_B": self.B}
        if self.W_res is not None:
            out["W_res"] = self.W_res
        return out


@dataclass
class DoRAState:
    A: Node
    B: Node
    m: Node

    def tensors(self) -> dict[str, Node]:
        return {"lora_A": self.A, "lora_B": self.B, "dora_m": self.m}


@dataclass
class AdaLoRAState:
    """P diag(lam * mask) Q; ``mask`` holds 1.0 for live and 0.0 for pruned entries."""

    P: Node
    lam: Node
    Q: Node
    mask: Node

    def tensors(self) -> dict[str, Node]:
        return {
            "ada_P": self.P,
            "ada_lambda": self.lam,
            "ada_Q": self.Q,
            "ada_mask": self.mask,
        }


@dataclass
class MiSSState:
    D: Node

    def tensors(self) -> dict[str, Node]:
        return {"miss_D": self.D}


@dataclass
class VeRAState:
    A_shared: Node
    B_shared: Node
    d: Node
    b: Node

    def tensors(self) -> dict[str, Node]:
        return {
            "vera_A": self.A_shared,
            "vera_B": self.B_shared,
            "vera_d": self.d,
            "vera_b": self.b,
        }


@dataclass
class IA3State:
    l: Node  # noqa: E741
    side: Literal["output", "input"]

    def tensors(self) -> dict[str, Node]:
        return {"ia3_l": self.l}


@dataclass
class LayerNormState:
    """LayerNorm gain and bias; trainable only under LN tuning or Full."""

    gain: Node
    bias: Node

    def tensors(self) -> dict[str, Node]:
        return {"gain": self.gain, "bias": self.bias}


AdapterState = (
    FrozenState
    | FullState
    | LowRankState
    | DoRAState
    | AdaLoRAState
    | MiSSState
    | VeRAState
    | IA3State
)

# Tensors that exist for bookkeeping and never enter the parameter count
NON_PARAMETER_SUFFIXES: frozenset[str] = frozenset({"ada_mask"})
