"""Tests for one on-policy RLVR step."""

import itertools

import numpy as np
import pytest

from src.adapters import AdaLoRASchedule, AdapterKind
from src.errors import ConfigError, ContractError, NumericalError
from src.rlvr import (
    SurrogateParams,
    TrainSettings,
    Variant,
    collect_groups,
    delta_norms,
    make_optimizer,
    train_step,
)
from src.tasks import TaskId, gen_instance
from src.tensor import Node, Rng

SETTINGS = TrainSettings(group_size=3, learning_rate=0.01, max_new=4)


def _prompts(n=2, seed=0):
    rng = Rng(seed)
    return [gen_instance(TaskId.MOD_ADD, 1, rng.substream("p", i)) for i in range(n)]


def _step(net, variant=Variant.GRPO, settings=SETTINGS, seed=5, step=0):
    optimizer = make_optimizer(net, settings.learning_rate, net.adapter_cfg)
    return train_step(
        net,
        _prompts(),
        SurrogateParams.for_variant(variant, settings.max_new),
        settings,
        Rng(seed),
        optimizer,
        step,
    )


def _values(net):
    return {name: node.value.copy() for name, node in net.named_tensors()}


@pytest.fixture
def alternating_rewards(monkeypatch):
    """Score completions 1, 0, 1, ... so every group has mixed rewards."""
    rewards = itertools.cycle([1, 0])
    monkeypatch.setattr("src.rlvr.train.verify", lambda tokens, instance: next(rewards))


@pytest.fixture
def zero_rewards(monkeypatch):
    monkeypatch.setattr("src.rlvr.train.verify", lambda tokens, instance: 0)


def test_collect_groups(tiny_net):
    groups = collect_groups(tiny_net(), _prompts(), SETTINGS, Rng(1))

    assert len(groups) == 2
    for group, instance in zip(groups, _prompts(), strict=True):
        assert group.prompt == instance.prompt
        assert group.size == 3
        assert set(group.rewards) <= {0, 1}
        assert all(1 <= len(c) <= 4 for c in group.completions)


def test_report_fields(tiny_net, alternating_rewards):
    report = _step(tiny_net(), step=7)

    assert report.step == 7
    assert report.mean_reward == pytest.approx(0.5)
    assert report.groups_kept == 2
    assert not report.skipped
    assert report.grad_norm > 0
    assert np.isfinite(report.loss)
    assert len(report.delta_norms) == 7


def test_update_moves_only_trainable_tensors(tiny_net, alternating_rewards):
    net = tiny_net()
    before = _values(net)

    _step(net)

    trainable = {n for n, p in net.named_tensors() if p.requires_grad}
    for name, node in net.named_tensors():
        moved = not np.array_equal(node.value, before[name])
        if name not in trainable:
            assert not moved, name
    proj = net.blocks[0].proj
    assert any(
        not np.array_equal(proj[m].state.B.value, before[f"layers.0.{m}.lora_B"])
        for m in ("q_proj", "v_proj", "down_proj")
    )


def test_deterministic(tiny_net):
    a, b = tiny_net(), tiny_net()

    report_a = _step(a)
    report_b = _step(b)

    assert report_a == report_b
    for (name, x), (_, y) in zip(a.named_tensors(), b.named_tensors(), strict=True):
        np.testing.assert_array_equal(x.value, y.value, err_msg=name)


class TestDynamicFiltering:
    def test_dapo_skips_when_every_group_is_uniform(self, tiny_net, zero_rewards):
        net = tiny_net()
        before = _values(net)

        report = _step(net, Variant.DAPO)

        assert report.skipped
        assert report.groups_kept == 0
        assert report.loss == 0.0 and report.grad_norm == 0.0
        for name, node in net.named_tensors():
            np.testing.assert_array_equal(node.value, before[name])

    def test_grpo_keeps_uniform_groups(self, tiny_net, zero_rewards):
        report = _step(tiny_net(), Variant.GRPO)

        assert not report.skipped
        assert report.groups_kept == 2
        assert report.grad_norm == 0.0

    def test_dapo_keeps_mixed_groups(self, tiny_net, alternating_rewards):
        report = _step(tiny_net(), Variant.DAPO)

        assert not report.skipped
        assert report.groups_kept == 2


@pytest.mark.parametrize("kind", [AdapterKind.FULL, AdapterKind.IA3, AdapterKind.VERA])
def test_other_kinds_train(tiny_net, alternating_rewards, kind):
    net = tiny_net(kind)
    before = _values(net)

    report = _step(net, Variant.DR_GRPO)

    assert not report.skipped
    assert any(
        not np.array_equal(node.value, before[name])
        for name, node in net.named_tensors()
        if node.requires_grad
    )


def test_adalora_prunes_to_target(tiny_net, alternating_rewards):
    net = tiny_net(AdapterKind.ADALORA)
    settings = TrainSettings(
        group_size=3,
        learning_rate=0.01,
        max_new=4,
        adalora_target_rank=1,
        adalora_schedule=AdaLoRASchedule(total_steps=1),
    )

    _step(net, settings=settings, step=1)

    for layer in net.linear_layers():
        assert layer.state.mask.value.sum() == 1.0


def test_non_finite_loss_aborts(tiny_net, monkeypatch):
    monkeypatch.setattr(
        "src.rlvr.train.batch_loss", lambda groups, lps, params: Node(np.array(np.nan))
    )

    with pytest.raises(NumericalError, match="step 0: non-finite loss"):
        _step(tiny_net())


def test_empty_batch(tiny_net):
    net = tiny_net()

    with pytest.raises(ContractError, match="empty prompt batch"):
        train_step(
            net,
            [],
            SurrogateParams(),
            SETTINGS,
            Rng(0),
            make_optimizer(net, 0.01, net.adapter_cfg),
        )


class TestDeltaNorms:
    def test_zero_at_init(self, tiny_net):
        norms = delta_norms(tiny_net(AdapterKind.DORA))

        assert list(norms) == [layer.name for layer in tiny_net().linear_layers()]
        assert all(v == pytest.approx(0.0, abs=1e-12) for v in norms.values())

    def test_empty_for_vector_kinds(self, tiny_net):
        assert delta_norms(tiny_net(AdapterKind.IA3)) == {}


@pytest.mark.parametrize(
    "kwargs",
    [
        {"group_size": 1},
        {"learning_rate": 0.0},
        {"max_new": 0},
        {"temperature": -1.0},
        {"top_p": 0.0},
        {"adalora_target_rank": -1},
    ],
)
def test_settings_validation(kwargs):
    with pytest.raises(ConfigError):
        TrainSettings(**kwargs)
