"""Shared pytest fixtures and configuration."""

import copy

import pytest

from src.adapters import AdapterConfig, AdapterKind
from src.harness import ExperimentConfig, config_from_dict
from src.policy import PolicyConfig, attach_adapters, build_policy
from src.tensor import Rng

TINY_POLICY = {
    "vocab": 16,
    "d_model": 8,
    "n_layers": 1,
    "n_heads": 2,
    "d_ff": 16,
    "max_seq": 12,
}

TINY_EXPERIMENT = {
    "name": "tiny",
    "seed": 7,
    "policy": TINY_POLICY,
    "adapter": {"kind": "LoRA", "rank": 2},
    "rlvr": {"variant": "GRPO"},
    "task": {"task": "ModAdd", "difficulty": 1},
    "train": {
        "steps": 2,
        "batch_size": 2,
        "group_size": 2,
        "learning_rate": 0.01,
        "max_new": 4,
        "log_every": 1,
    },
    "warmstart": {"steps": 2, "batch_size": 4},
    "evaluation": {"instances": 3, "k": 2},
}


@pytest.fixture(autouse=True)
def no_env_overrides(monkeypatch):
    """Keep SEED and OUT_DIR from the calling shell out of every test."""
    monkeypatch.delenv("SEED", raising=False)
    monkeypatch.delenv("OUT_DIR", raising=False)


@pytest.fixture
def tiny_policy_cfg() -> PolicyConfig:
    return PolicyConfig(**TINY_POLICY)


@pytest.fixture
def tiny_net(tiny_policy_cfg):
    """Factory: a tiny policy wrapped with the given adapter kind."""

    def make(
        kind: AdapterKind = AdapterKind.LORA, rank: int = 2, seed: int = 3, **kwargs
    ):
        rng = Rng(seed)
        net = build_policy(tiny_policy_cfg, rng.substream("policy"))
        cfg = AdapterConfig(kind=kind, rank=rank, **kwargs)
        return attach_adapters(net, cfg, rng.substream("adapters"))

    return make


@pytest.fixture
def experiment_data(tmp_path) -> dict:
    """Raw config dict for a seconds-long experiment writing under tmp_path."""
    data = copy.deepcopy(TINY_EXPERIMENT)
    data["output_dir"] = str(tmp_path / "runs")
    return data


@pytest.fixture
def make_config(experiment_data):
    """Factory: tiny ExperimentConfig with per-section overrides."""

    def make(**sections) -> ExperimentConfig:
        data = copy.deepcopy(experiment_data)
        for key, value in sections.items():
            if isinstance(value, dict):
                data.setdefault(key, {}).update(value)
            else:
                data[key] = value
        return config_from_dict(data, environ={})

    return make
