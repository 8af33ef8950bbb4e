"""Tests for the adapted forward pass, its gradients and merged deltas."""

import numpy as np
import pytest

from src.adapters import (
    AdapterConfig,
    AdapterKind,
    LayerNormState,
    LinearWithAdapter,
    layer_norm_forward,
    make_adapter,
    merge_delta,
)
from src.errors import ContractError, DimensionError, UnsupportedKindError
from src.tensor import Node, Rng, gradient_errors, parameter
from src.tensor import autodiff as ad

WEIGHT_KINDS = [
    k for k in AdapterKind if k not in (AdapterKind.IA3, AdapterKind.LN_TUNING)
]


def _perturbed_layer(kind, module="k_proj", shape=(8, 6), rank=2, dropout=0.0):
    """A layer whose trainable tensors have moved away from their init."""
    W0 = Rng(0).normal(shape)
    cfg = AdapterConfig(kind=kind, rank=rank, dropout=dropout)
    state = make_adapter(kind, W0, cfg, Rng(1), module=module)
    noise = Rng(2)
    for suffix, node in state.tensors().items():
        if node.requires_grad:
            node.value = node.value + 0.1 * noise.substream(suffix).normal(node.shape)
    return LinearWithAdapter(f"layers.0.{module}", W0, state, cfg)


def _trainables(layer):
    return {
        name: node for name, node in layer.named_parameters() if node.requires_grad
    }


@pytest.mark.parametrize(
    "kind", [k for k in AdapterKind if k is not AdapterKind.LN_TUNING]
)
def test_gradients_match_finite_differences(kind):
    layer = _perturbed_layer(kind)
    x = Rng(3).normal((4, 6))
    w = Rng(4).normal((4, 8))
    params = _trainables(layer)

    errors = gradient_errors(lambda: ad.sum(layer(Node(x)) * w), params)

    assert params
    assert max(errors.values()) < 1e-5, errors


def test_ia3_input_side_gradient():
    layer = _perturbed_layer(AdapterKind.IA3, module="down_proj")
    x = Rng(3).normal((4, 6))

    errors = gradient_errors(lambda: ad.sum(layer(Node(x)) ** 2.0), _trainables(layer))

    assert errors["layers.0.down_proj.ia3_l"] < 1e-5


def test_adalora_pruned_entries_get_no_gradient():
    layer = _perturbed_layer(AdapterKind.ADALORA, rank=3)
    layer.state.mask.value = np.array([1.0, 0.0, 1.0])

    ad.backward(ad.sum(layer(Node(Rng(3).normal((4, 6))))))

    assert layer.state.lam.grad[1] == 0.0
    assert layer.state.lam.grad[0] != 0.0


def test_layer_norm_tuning_gradient():
    state = LayerNormState(
        gain=parameter(1.0 + 0.1 * Rng(5).normal((6,)), "gain"),
        bias=parameter(0.1 * Rng(6).normal((6,)), "bias"),
    )
    x = Rng(7).normal((3, 6))
    w = Rng(8).normal((3, 6))

    errors = gradient_errors(
        lambda: ad.sum(layer_norm_forward(state, Node(x)) * w),
        {"gain": state.gain, "bias": state.bias},
    )

    assert max(errors.values()) < 1e-5


@pytest.mark.parametrize("kind", WEIGHT_KINDS)
def test_merged_delta_reproduces_forward(kind):
    layer = _perturbed_layer(kind)
    x = Rng(3).normal((5, 6))

    merged = layer.W0.value + merge_delta(layer)

    np.testing.assert_allclose(layer(Node(x)).value, x @ merged.T, atol=1e-10)


def test_miss_delta_tiles_the_shard():
    layer = _perturbed_layer(AdapterKind.MISS)
    D = layer.state.D.value

    delta = merge_delta(layer)

    assert delta.shape == (8, 6)
    np.testing.assert_array_equal(delta[:, :2], D)
    np.testing.assert_array_equal(delta[:, 4:], D)


@pytest.mark.parametrize("kind", [AdapterKind.IA3, AdapterKind.LN_TUNING])
def test_vector_kinds_have_no_weight_delta(kind):
    layer = _perturbed_layer(kind)

    with pytest.raises(UnsupportedKindError, match="no weight-space delta"):
        merge_delta(layer)


class TestScale:
    """Multiplier on BA per kind."""

    @pytest.mark.parametrize(
        ("kind", "expected"),
        [
            (AdapterKind.LORA, 2.0),
            (AdapterKind.LORA_PLUS, 2.0),
            (AdapterKind.LORA_FA, 2.0),
            (AdapterKind.DORA, 2.0),
            (AdapterKind.RSLORA, 8.0),
            (AdapterKind.PISSA, 1.0),
            (AdapterKind.MILORA, 1.0),
            (AdapterKind.VERA, 1.0),
        ],
    )
    def test_default_alpha(self, kind, expected):
        assert AdapterConfig(kind=kind, rank=16).scale == pytest.approx(expected)

    def test_explicit_alpha(self):
        cfg = AdapterConfig(kind=AdapterKind.LORA, rank=4, alpha=16.0)

        assert cfg.scale == 4.0


class TestDropout:
    def test_only_applied_in_training_with_rng(self):
        layer = _perturbed_layer(AdapterKind.LORA, dropout=0.5)
        x = Node(Rng(3).normal((4, 6)))

        eval_out = layer(x).value
        no_rng = layer(x, training=True).value
        dropped = layer(x, training=True, rng=Rng(9)).value

        np.testing.assert_array_equal(eval_out, no_rng)
        assert not np.allclose(eval_out, dropped)

    def test_base_path_is_not_dropped(self):
        layer = _perturbed_layer(AdapterKind.LORA, dropout=0.5)
        layer.state.B.value = np.zeros_like(layer.state.B.value)
        x = Rng(3).normal((4, 6))

        out = layer(Node(x), training=True, rng=Rng(9)).value

        np.testing.assert_allclose(out, x @ layer.W0.value.T)


class TestLayerContract:
    def test_name_must_end_in_a_target_module(self):
        with pytest.raises(ContractError, match="'attn' is not one of"):
            LinearWithAdapter("layers.0.attn", np.eye(2))

    def test_input_width_checked(self):
        layer = _perturbed_layer(AdapterKind.LORA)

        with pytest.raises(DimensionError, match="does not match d_in=6"):
            layer(Node(np.ones((2, 5))))

    def test_named_parameters_drop_replaced_w0(self):
        full = _perturbed_layer(AdapterKind.FULL)
        pissa = _perturbed_layer(AdapterKind.PISSA)
        adalora = _perturbed_layer(AdapterKind.ADALORA)

        assert "layers.0.k_proj.W0" not in dict(full.named_parameters())
        assert "layers.0.k_proj.W0" not in dict(pissa.named_parameters())
        assert "layers.0.k_proj.ada_mask" not in dict(adalora.named_parameters())
        assert "layers.0.k_proj.ada_mask" in dict(adalora.named_tensors())
        assert "layers.0.k_proj.W0" in dict(pissa.named_tensors())
