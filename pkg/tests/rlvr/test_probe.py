"""Tests for the controlled principal-gradient probe."""

import numpy as np
import pytest

from src.adapters import AdapterConfig, AdapterKind
from src.errors import UnsupportedKindError
from src.rlvr import principal_gradient_probe, probe_weight
from src.spectra import principal_mass
from src.tensor import Rng, svd


def test_probe_weight_spectrum():
    W = probe_weight(8, 6, Rng(0))

    _, S, _ = svd(W)

    assert W.shape == (8, 6)
    np.testing.assert_allclose(S[:3], [1.0, 0.7, 0.49], atol=1e-9)
    assert S[3] < 1e-3


@pytest.mark.parametrize(
    "kind", [AdapterKind.LORA, AdapterKind.PISSA, AdapterKind.MILORA]
)
def test_update_lands_in_the_principal_subspace(kind):
    cfg = AdapterConfig(kind=kind, rank=2, dropout=0.0)

    result = principal_gradient_probe(cfg, Rng(4), steps=150)

    assert result.losses[-1] < 0.2 * result.losses[0]
    assert principal_mass(result.profile, 2) > 0.8
    assert len(result.profile) == 16


def test_minor_init_reorients_within_100_steps():
    cfg = AdapterConfig(kind=AdapterKind.MILORA, rank=2, dropout=0.0)

    result = principal_gradient_probe(cfg, Rng(4), steps=100)

    assert len(result.losses) == 100
    assert principal_mass(result.profile, 2) > 0.9


def test_deterministic():
    cfg = AdapterConfig(kind=AdapterKind.LORA, rank=2)

    a = principal_gradient_probe(cfg, Rng(1), steps=5)
    b = principal_gradient_probe(cfg, Rng(1), steps=5)

    assert a.losses == b.losses
    np.testing.assert_array_equal(a.profile.c, b.profile.c)


@pytest.mark.parametrize("kind", [AdapterKind.IA3, AdapterKind.LN_TUNING])
def test_vector_kinds_rejected(kind):
    with pytest.raises(UnsupportedKindError, match="no weight delta"):
        principal_gradient_probe(AdapterConfig(kind=kind), Rng(0), steps=1)
