"""Seeded construction of the adapted policy for an experiment."""

from ..policy import PolicyNet, attach_adapters, build_policy
from ..rlvr import pretrain_format
from ..tensor import Rng
from .experiment_config import ExperimentConfig


def build_network(config: ExperimentConfig, skeleton: bool = False) -> PolicyNet:
    """Base policy, format warm-start, then adapters.

    ``skeleton`` skips random draws and the warm-start; the loader fills
    every tensor from a checkpoint afterwards.
    """
    rng = Rng(config.seed)
    net = build_policy(config.policy, rng.substream("policy"), skeleton=skeleton)
    if not skeleton:
        pretrain_format(
            net,
            config.task.task,
            config.task.difficulty,
            config.warmstart,
            rng.substream("warmstart"),
        )
    return attach_adapters(net, config.adapter, rng.substream("adapters"))
