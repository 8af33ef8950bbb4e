"""Trainable-parameter accounting and optimizer learning-rate groups."""

from collections.abc import Iterator
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Protocol

from ..errors import ContractError
from ..tensor import Node
from .config import AdapterConfig, AdapterKind


class HasParameters(Protocol):
    def named_parameters(self) -> Iterator[tuple[str, Node]]: ...


@dataclass
class ParamGroup:
    lr: float
    params: list[tuple[str, Node]] = field(default_factory=list)


def unique_parameters(model: HasParameters) -> list[tuple[str, Node]]:
    """Parameters in model order, each shared tensor listed once."""
    seen: set[int] = set()
    out: list[tuple[str, Node]] = []
    for name, node in model.named_parameters():
        if id(node) not in seen:
            seen.add(id(node))
            out.append((name, node))
    return out


def parameter_counts(model: HasParameters) -> tuple[int, int]:
    """(trainable, total) scalar counts."""
    trainable = total = 0
    for _, node in unique_parameters(model):
        total += node.value.size
        if node.requires_grad:
            trainable += node.value.size
    return trainable, total


def trainable_fraction_exact(model: HasParameters) -> Fraction:
    trainable, total = parameter_counts(model)
    if total == 0:
        raise ContractError("trainable_fraction: model has no parameters")
    return Fraction(trainable, total)


def trainable_fraction(model: HasParameters) -> float:
    return float(trainable_fraction_exact(model))


def lr_groups(
    model: HasParameters, base_lr: float, cfg: AdapterConfig
) -> list[ParamGroup]:
    """Learning-rate groups over trainable parameters.

    LoRA+ trains every B matrix at ``lora_plus_lambda * base_lr`` and the
    rest at ``base_lr``; every other kind gets one uniform group.
    """
    if base_lr <= 0:
        raise ContractError(
            f"lr_groups: base learning rate must be positive, got {base_lr}"
        )
    trainable = [(n, p) for n, p in unique_parameters(model) if p.requires_grad]
    if cfg.kind is not AdapterKind.LORA_PLUS or cfg.lora_plus_lambda == 1.0:
        return [ParamGroup(lr=base_lr, params=trainable)]

    b_group = ParamGroup(lr=cfg.lora_plus_lambda * base_lr)
    a_group = ParamGroup(lr=base_lr)
    for name, node in trainable:
        (b_group if name.endswith(".lora_B") else a_group).params.append((name, node))
    return [g for g in (b_group, a_group) if g.params]
