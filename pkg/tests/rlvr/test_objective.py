"""Tests for the GRPO, DAPO and Dr. GRPO objectives."""

import math

import numpy as np
import pytest

from src.errors import ConfigError, ContractError
from src.rlvr import (
    RolloutGroup,
    SurrogateParams,
    Variant,
    batch_loss,
    clipped_surrogate,
    dynamic_filter,
    group_advantages,
    response_contributions,
)
from src.tensor import Node, Rng, backward, parameter
from src.tensor import autodiff as ad

GRPO = SurrogateParams.for_variant(Variant.GRPO)
DAPO = SurrogateParams.for_variant(Variant.DAPO)
DR_GRPO = SurrogateParams.for_variant(Variant.DR_GRPO)


def _group(rewards, lengths=None, log_prob=-1.0):
    lengths = lengths or [2] * len(rewards)
    completions = tuple(tuple(range(8, 8 + n)) for n in lengths)
    return RolloutGroup(
        prompt=(1, 8),
        completions=completions,
        rewards=tuple(rewards),
        old_log_probs=tuple(np.full(n, log_prob) for n in lengths),
    )


def _at_sampling_policy(group):
    """New log-probs equal to the old ones: every ratio is 1."""
    _, old, _ = group.padded()
    return parameter(old, "new")


class TestAdvantages:
    def test_standardised(self):
        adv = group_advantages([1, 0, 0, 0], Variant.GRPO)

        np.testing.assert_allclose(adv, [math.sqrt(3), *[-1 / math.sqrt(3)] * 3])

    def test_dapo_matches_grpo(self):
        np.testing.assert_array_equal(
            group_advantages([1, 1, 0], Variant.DAPO),
            group_advantages([1, 1, 0], Variant.GRPO),
        )

    def test_dr_grpo_centres_only(self):
        np.testing.assert_allclose(
            group_advantages([1, 0, 0, 0], Variant.DR_GRPO), [0.75, -0.25, -0.25, -0.25]
        )

    @pytest.mark.parametrize("variant", list(Variant))
    @pytest.mark.parametrize("reward", [0, 1])
    def test_equal_rewards_give_zero(self, variant, reward):
        np.testing.assert_array_equal(
            group_advantages([reward] * 4, variant), np.zeros(4)
        )

    @pytest.mark.parametrize("variant", list(Variant))
    def test_sum_to_zero(self, variant):
        assert group_advantages([1, 0, 1, 1, 0], variant).sum() == pytest.approx(0.0)

    @pytest.mark.parametrize("variant", list(Variant))
    def test_random_groups_match_direct_formula(self, variant):
        rng = Rng(21)
        for _ in range(1000):
            rewards = [rng.integers(0, 2) for _ in range(rng.integers(2, 9))]
            mean = sum(rewards) / len(rewards)
            centred = [r - mean for r in rewards]
            if variant is Variant.DR_GRPO:
                expected = centred
            else:
                std = math.sqrt(sum(c * c for c in centred) / len(rewards))
                expected = [c / max(std, 1e-6) for c in centred]

            np.testing.assert_allclose(
                group_advantages(rewards, variant), expected, rtol=0, atol=1e-12
            )


class TestClippedSurrogate:
    def test_unclipped_inside_trust_region(self):
        assert clipped_surrogate(1.1, 2.0, GRPO) == pytest.approx(2.2)

    def test_positive_advantage_clips_at_upper_knee(self):
        assert clipped_surrogate(1.5, 1.0, GRPO) == pytest.approx(1.2)
        assert clipped_surrogate(1.5, 1.0, DAPO) == pytest.approx(1.28)

    def test_negative_advantage_clips_at_lower_knee(self):
        assert clipped_surrogate(0.5, -1.0, GRPO) == pytest.approx(-0.8)
        assert clipped_surrogate(0.5, -1.0, DAPO) == pytest.approx(-0.8)

    def test_pessimistic_bound_not_clipped(self):
        """A ratio above the knee with a negative advantage keeps its full penalty."""
        assert clipped_surrogate(1.5, -1.0, GRPO) == pytest.approx(-1.5)

    @pytest.mark.parametrize(("params", "knee"), [(GRPO, 1.2), (DAPO, 1.28)])
    def test_ratio_grid(self, params, knee):
        ratios = np.linspace(0.5, 2.0, 61)
        group = _group([1] * 61, lengths=[1] * 61)
        new = Node(group.padded()[1] + np.log(ratios)[:, None])

        gains = response_contributions(group, new, params, np.ones(61)).value
        losses = response_contributions(group, new, params, -np.ones(61)).value

        np.testing.assert_allclose(gains, np.minimum(ratios, knee), rtol=1e-12)
        np.testing.assert_allclose(losses, -np.maximum(ratios, 0.8), rtol=1e-12)
        np.testing.assert_allclose(gains[ratios > knee], knee, rtol=1e-12)
        for ratio, gain in zip(ratios, gains, strict=True):
            assert gain == pytest.approx(clipped_surrogate(ratio, 1.0, params))

    def test_ratio_must_be_positive(self):
        with pytest.raises(ContractError):
            clipped_surrogate(0.0, 1.0, GRPO)


class TestResponseContributions:
    def test_matches_scalar_surrogate(self):
        group = _group([1, 0], lengths=[1, 1])
        new = Node(group.padded()[1] + np.log([[1.5], [0.9]]))

        out = response_contributions(group, new, DAPO).value
        adv = group_advantages([1, 0], Variant.DAPO)

        np.testing.assert_allclose(
            out,
            [
                clipped_surrogate(1.5, adv[0], DAPO),
                clipped_surrogate(0.9, adv[1], DAPO),
            ],
        )

    def test_clipped_region_has_no_gradient(self):
        group = _group([1, 0], lengths=[1, 1])
        new = parameter(group.padded()[1] + np.log([[1.5], [1.0]]), "new")

        backward(ad.sum(response_contributions(group, new, GRPO)))

        assert new.grad[0, 0] == 0.0
        assert new.grad[1, 0] != 0.0

    def test_grpo_normalises_by_response_length(self):
        group = _group([1, 0], lengths=[1, 4])
        new = _at_sampling_policy(group)

        backward(ad.sum(response_contributions(group, new, GRPO)))

        adv = group_advantages([1, 0], Variant.GRPO)
        np.testing.assert_allclose(new.grad[0], [adv[0], 0, 0, 0])
        np.testing.assert_allclose(new.grad[1], [adv[1] / 4] * 4)

    def test_dr_grpo_uses_a_fixed_normaliser(self):
        group = _group([1, 0], lengths=[1, 4])
        new = _at_sampling_policy(group)

        backward(ad.sum(response_contributions(group, new, DR_GRPO)))

        np.testing.assert_allclose(new.grad[0], [0.5 / 8, 0, 0, 0])
        np.testing.assert_allclose(new.grad[1], [-0.5 / 8] * 4)

    def test_long_wrong_answers_weigh_more_under_dr_grpo(self):
        group = _group([1, 0], lengths=[2, 10])
        dr_grpo = SurrogateParams.for_variant(Variant.DR_GRPO, max_completion_len=10)

        grpo = response_contributions(group, _at_sampling_policy(group), GRPO).value
        dr = response_contributions(group, _at_sampling_policy(group), dr_grpo).value

        assert grpo[0] == pytest.approx(-grpo[1])
        assert dr[1] == pytest.approx(5 * -dr[0])

    def test_shape_mismatch(self):
        group = _group([1, 0])

        with pytest.raises(ContractError, match="do not match"):
            response_contributions(group, Node(np.zeros((2, 5))), GRPO)


class TestBatchLoss:
    def test_zero_at_sampling_policy(self):
        groups = [_group([1, 0, 0]), _group([0, 1, 1], lengths=[1, 2, 3])]

        loss = batch_loss(groups, [_at_sampling_policy(g) for g in groups], GRPO)

        assert loss.value == pytest.approx(0.0)

    def test_negated_mean_of_group_means(self):
        groups = [_group([1, 0], lengths=[1, 1]), _group([0, 1], lengths=[1, 1])]
        shift = np.log([[1.1], [1.0]])
        new = [Node(g.padded()[1] + shift) for g in groups]

        loss = batch_loss(groups, new, GRPO).value

        expected = [
            np.mean(response_contributions(g, n, GRPO).value)
            for g, n in zip(groups, new, strict=True)
        ]
        assert loss == pytest.approx(-np.mean(expected))

    def test_lengths_must_agree(self):
        with pytest.raises(ContractError, match="2 groups but 1"):
            batch_loss([_group([1, 0]), _group([0, 1])], [Node(np.zeros((2, 2)))], GRPO)

    def test_no_groups(self):
        with pytest.raises(ContractError, match="no groups"):
            batch_loss([], [], GRPO)


def test_dynamic_filter_keeps_order():
    mixed_a = _group([1, 0])
    mixed_b = _group([0, 1, 1])

    kept = dynamic_filter([_group([0, 0]), mixed_a, _group([1, 1]), mixed_b])

    assert kept == [mixed_a, mixed_b]


class TestRolloutGroup:
    def test_padded(self):
        group = _group([1, 0], lengths=[1, 3])

        tokens, old, mask = group.padded()

        assert tokens.tolist() == [[8, 0, 0], [8, 9, 10]]
        np.testing.assert_array_equal(old, [[-1, 0, 0], [-1, -1, -1]])
        np.testing.assert_array_equal(mask, [[1, 0, 0], [1, 1, 1]])

    def test_empty_completions_keep_one_column(self):
        group = _group([0, 1], lengths=[1, 1])
        empty = RolloutGroup((1,), ((), ()), (0, 0), (np.zeros(0), np.zeros(0)))

        assert group.width == 1
        assert empty.padded()[0].shape == (2, 1)

    def test_needs_two_completions(self):
        with pytest.raises(ContractError, match="G >= 2"):
            _group([1])

    def test_binary_rewards(self):
        with pytest.raises(ContractError, match="0 or 1"):
            _group([2, 0])

    def test_log_prob_lengths(self):
        with pytest.raises(ContractError, match="2 tokens but 1 old log-probs"):
            RolloutGroup((1,), ((8, 9), (8,)), (1, 0), (np.zeros(1), np.zeros(1)))

    def test_sizes_agree(self):
        with pytest.raises(ContractError, match="sizes disagree"):
            RolloutGroup((1,), ((8,), (8,)), (1,), (np.zeros(1), np.zeros(1)))


class TestSurrogateParams:
    def test_variant_defaults(self):
        assert (GRPO.eps_low, GRPO.eps_high) == (0.2, 0.2)
        assert (DAPO.eps_low, DAPO.eps_high) == (0.2, 0.28)
        assert DR_GRPO.variant is Variant.DR_GRPO

    def test_variant_from_string(self):
        assert SurrogateParams(variant="DrGRPO").variant is Variant.DR_GRPO

    def test_unknown_variant(self):
        with pytest.raises(ConfigError, match="rlvr.variant"):
            SurrogateParams(variant="PPO")

    def test_grpo_is_symmetric(self):
        with pytest.raises(ConfigError, match="symmetrically"):
            SurrogateParams(Variant.GRPO, eps_low=0.2, eps_high=0.28)

    def test_bounds_ordered(self):
        with pytest.raises(ConfigError):
            SurrogateParams(Variant.DAPO, eps_low=0.3, eps_high=0.2)
