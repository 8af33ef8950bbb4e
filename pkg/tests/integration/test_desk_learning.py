"""Desk-scale learning checks: RLVR lifts accuracy and the runs stay sane."""

import math

import pytest

from src.adapters import AdapterConfig, AdapterKind
from src.rlvr import principal_gradient_probe
from src.spectra import principal_mass
from src.tensor import Rng

pytestmark = pytest.mark.slow


@pytest.mark.parametrize("name", ["lora", "full"])
def test_training_lifts_accuracy(desk_runs, name):
    run = desk_runs[name]

    assert run.after.mean_avg_at_k > run.before.mean_avg_at_k


def test_rewards_rise_over_training(desk_runs):
    rewards = [r.mean_reward for r in desk_runs["lora"].result.reports]

    head, tail = rewards[:20], rewards[-20:]
    assert sum(tail) / len(tail) > sum(head) / len(head)


def _windowed(rewards, width=50):
    return [
        sum(rewards[i : i + width]) / width for i in range(len(rewards) - width + 1)
    ]


@pytest.mark.parametrize("name", ["lora", "full"])
def test_reward_climbs_past_0_8_within_2000_steps(long_runs, name):
    rewards = [r.mean_reward for r in long_runs[name].reports]
    windows = _windowed(rewards)

    assert len(rewards) == 2000
    assert windows[0] < 0.2
    assert max(windows) > 0.8


@pytest.mark.parametrize("name", ["lora", "full", "ia3"])
def test_metrics_stay_finite(desk_runs, name):
    for report in desk_runs[name].result.reports:
        assert math.isfinite(report.loss)
        assert math.isfinite(report.grad_norm)


def test_pass_rate_bounds_average(desk_runs):
    for run in desk_runs.values():
        assert run.after.mean_avg_at_k <= run.after.pass_rate


def test_adapter_is_far_smaller_than_full(desk_runs):
    lora = desk_runs["lora"].result.trainable_fraction
    full = desk_runs["full"].result.trainable_fraction

    assert full == 1.0
    assert lora < 0.1


def test_vector_kind_has_no_spectrum(desk_runs):
    assert desk_runs["ia3"].spectra == []


def test_lora_update_is_not_confined_to_the_top_directions(desk_runs):
    """Under RLVR the update spreads beyond the principal subspace."""
    masses = [principal_mass(entry.profile, 4) for entry in desk_runs["lora"].spectra]

    assert sum(masses) / len(masses) < 0.9


@pytest.mark.parametrize(
    "kind", [AdapterKind.LORA, AdapterKind.PISSA, AdapterKind.MILORA]
)
def test_probe_pulls_every_init_into_the_principal_subspace(kind):
    cfg = AdapterConfig(kind=kind, rank=4, dropout=0.0)

    result = principal_gradient_probe(cfg, Rng(0), d_out=32, d_in=32, steps=300)

    assert principal_mass(result.profile, 4) > 0.9
