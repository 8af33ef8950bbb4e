"""Decoder-only transformer whose projections host adapters.

Blocks are pre-LayerNorm with causal multi-head attention and a SwiGLU
feed-forward ``down(silu(gate(h)) * up(h))``. Positions use learned
absolute embeddings.
"""

import logging
from collections.abc import Iterator
from dataclasses import dataclass

import numpy as np

from ..adapters import (
    AdapterConfig,
    AdapterKind,
    LayerNormState,
    LinearWithAdapter,
    SharedBank,
    make_adapter,
    trainable_fraction,
)
from ..config import BASE_INIT_STD
from ..tensor import Matrix, Node, Rng, parameter
from .config import PolicyConfig

logger = logging.getLogger(__name__)

ATTENTION_MODULES = ("q_proj", "k_proj", "v_proj", "o_proj")
FFN_MODULES = ("gate_proj", "up_proj", "down_proj")


@dataclass
class Block:
    ln1: LayerNormState
    ln2: LayerNormState
    proj: dict[str, LinearWithAdapter]


class PolicyNet:
    """Token and position embeddings, ``n_layers`` blocks, final norm, output head."""

    def __init__(
        self,
        cfg: PolicyConfig,
        tok_emb: Node,
        pos_emb: Node,
        blocks: list[Block],
        ln_f: LayerNormState,
        head: Node,
    ):
        self.cfg = cfg
        self.tok_emb = tok_emb
        self.pos_emb = pos_emb
        self.blocks = blocks
        self.ln_f = ln_f
        self.head = head
        self.adapter_cfg: AdapterConfig | None = None

    def __repr__(self) -> str:
        kind = self.adapter_cfg.kind if self.adapter_cfg else "base"
        return f"PolicyNet({self.cfg}, adapter={kind})"

    def linear_layers(self) -> Iterator[LinearWithAdapter]:
        for block in self.blocks:
            yield from block.proj.values()

    def layer_norms(self) -> Iterator[tuple[str, LayerNormState]]:
        for i, block in enumerate(self.blocks):
            yield f"layers.{i}.ln1", block.ln1
            yield f"layers.{i}.ln2", block.ln2
        yield "ln_f", self.ln_f

    def _base_tensors(self) -> Iterator[tuple[str, Node]]:
        yield "tok_emb", self.tok_emb
        yield "pos_emb", self.pos_emb
        for prefix, ln in self.layer_norms():
            for suffix, node in ln.tensors().items():
                yield f"{prefix}.{suffix}", node
        yield "head", self.head

    def named_tensors(self) -> Iterator[tuple[str, Node]]:
        """Every tensor in a fixed order, including frozen W0 references."""
        yield from self._base_tensors()
        for layer in self.linear_layers():
            yield from layer.named_tensors()

    def named_parameters(self) -> Iterator[tuple[str, Node]]:
        """Tensors read by the forward pass."""
        yield from self._base_tensors()
        for layer in self.linear_layers():
            yield from layer.named_parameters()

    def set_trainable(self, trainable: bool) -> None:
        for _, node in self.named_tensors():
            node.requires_grad = trainable

    def zero_grad(self) -> None:
        for _, node in self.named_tensors():
            node.zero_grad()


def build_policy(cfg: PolicyConfig, rng: Rng, skeleton: bool = False) -> PolicyNet:
    """Randomly initialised base network; ``skeleton`` fills zeros instead.

    Every base tensor starts trainable so the format warm-start can fit it;
    ``attach_adapters`` freezes what the adapter kind does not train.
    """
    d, ff = cfg.d_model, cfg.d_ff

    def draw(name: str, shape: tuple[int, int]) -> Matrix:
        if skeleton:
            return np.zeros(shape)
        return rng.substream(name).normal(shape, BASE_INIT_STD)

    def weight(name: str, shape: tuple[int, int]) -> Node:
        return parameter(draw(name, shape), name)

    def norm(name: str) -> LayerNormState:
        return LayerNormState(
            gain=parameter(np.ones(d), f"{name}.gain"),
            bias=parameter(np.zeros(d), f"{name}.bias"),
        )

    def linear(name: str, shape: tuple[int, int]) -> LinearWithAdapter:
        layer = LinearWithAdapter(name, draw(name, shape))
        layer.W0.requires_grad = True
        return layer

    shapes = {
        "q_proj": (d, d),
        "k_proj": (d, d),
        "v_proj": (d, d),
        "o_proj": (d, d),
        "gate_proj": (ff, d),
        "up_proj": (ff, d),
        "down_proj": (d, ff),
    }
    blocks = [
        Block(
            ln1=norm(f"layers.{i}.ln1"),
            ln2=norm(f"layers.{i}.ln2"),
            proj={
                m: linear(f"layers.{i}.{m}", shapes[m])
                for m in (*ATTENTION_MODULES, *FFN_MODULES)
            },
        )
        for i in range(cfg.n_layers)
    ]
    return PolicyNet(
        cfg,
        tok_emb=weight("tok_emb", (cfg.vocab, d)),
        pos_emb=weight("pos_emb", (cfg.max_seq, d)),
        blocks=blocks,
        ln_f=norm("ln_f"),
        head=weight("head", (cfg.vocab, d)),
    )


def attach_adapters(net: PolicyNet, adapter_cfg: AdapterConfig, rng: Rng) -> PolicyNet:
    """Wrap every projection with ``adapter_cfg.kind`` and set trainable flags.

    Full trains every tensor; LN tuning trains only LayerNorm gains and biases;
    every other kind trains only its adapter tensors.
    """
    kind = adapter_cfg.kind
    net.set_trainable(False)
    bank: SharedBank = {}
    for layer in net.linear_layers():
        layer.state = make_adapter(
            kind,
            layer.W0.value,
            adapter_cfg,
            rng.substream(layer.name),
            module=layer.module,
            shared_bank=bank,
        )
        layer.cfg = adapter_cfg

    if kind is AdapterKind.FULL:
        for _, node in net.named_parameters():
            node.requires_grad = True
    elif kind is AdapterKind.LN_TUNING:
        for _, ln in net.layer_norms():
            ln.gain.requires_grad = True
            ln.bias.requires_grad = True

    net.adapter_cfg = adapter_cfg
    logger.info(
        "Attached %s adapters (rank %d): %.4f%% trainable",
        kind,
        adapter_cfg.rank,
        100.0 * trainable_fraction(net),
    )
    return net


def freeze_all(net: PolicyNet) -> PolicyNet:
    net.set_trainable(False)
    return net
