"""Per-layer spectral profiles between two network snapshots."""

import logging
from dataclasses import dataclass
from pathlib import Path

from ..adapters import VECTOR_KINDS, merge_delta
from ..errors import ArchitectureMismatchError
from ..policy import PolicyNet
from ..utilities import write_csv
from .profile import SpectralBasis, SpectralProfile, principal_mass, project_update

logger = logging.getLogger(__name__)

SPECTRA_HEADER = ("layer_name", "k", "c_k", "normalized_k", "cumulative_energy_k")
SUMMARY_HEADER = ("layer_name", "principal_mass_r", "cross_energy", "delta_fro")


@dataclass(frozen=True)
class LayerSpectrum:
    layer_name: str
    profile: SpectralProfile


def _signature(net: PolicyNet) -> tuple[object, ...]:
    kind = net.adapter_cfg.kind if net.adapter_cfg else None
    rank = net.adapter_cfg.rank if net.adapter_cfg else None
    shapes = tuple((name, node.shape) for name, node in net.named_tensors())
    return (net.cfg, kind, rank, shapes)


def check_same_architecture(before: PolicyNet, after: PolicyNet) -> None:
    a, b = _signature(before), _signature(after)
    if a[:3] != b[:3]:
        raise ArchitectureMismatchError(
            f"networks differ: {a[0]} {a[1]} r={a[2]} vs {b[0]} {b[1]} r={b[2]}"
        )
    if len(a[3]) != len(b[3]):
        raise ArchitectureMismatchError(
            f"tensor count differs: {len(a[3])} vs {len(b[3])}"
        )
    if a[3] != b[3]:
        diff = next(x for x, y in zip(a[3], b[3], strict=True) if x != y)
        raise ArchitectureMismatchError(f"tensor layout differs at {diff[0]}")


def spectra_report(net_before: PolicyNet, net_after: PolicyNet) -> list[LayerSpectrum]:
    """Profile the update between snapshots for every adapter-bearing layer.

    The basis is the SVD of the before-snapshot's base weight W0. Kinds
    without a weight-space delta (IA3, LN tuning) produce no rows.
    """
    check_same_architecture(net_before, net_after)
    cfg = net_after.adapter_cfg
    if cfg is not None and cfg.kind in VECTOR_KINDS:
        logger.info(
            "spectra: %s has no weight-space delta, nothing to report", cfg.kind
        )
        return []

    report = []
    for before, after in zip(
        net_before.linear_layers(), net_after.linear_layers(), strict=True
    ):
        delta = merge_delta(after) - merge_delta(before)
        basis = SpectralBasis.of(before.W0.value)
        report.append(LayerSpectrum(after.name, project_update(delta, basis)))
    return report


def write_spectra_csv(path: Path, report: list[LayerSpectrum]) -> None:
    rows = [
        (entry.layer_name, k, float(c), float(n), float(e))
        for entry in report
        for k, (c, n, e) in enumerate(
            zip(
                entry.profile.c,
                entry.profile.normalized,
                entry.profile.cumulative_energy,
                strict=True,
            )
        )
    ]
    write_csv(path, SPECTRA_HEADER, rows)


def write_summary_csv(path: Path, report: list[LayerSpectrum], r: int) -> None:
    """One row per layer with the top-r energy share, cross energy and ||ΔW||_F."""
    rows = [
        (
            entry.layer_name,
            principal_mass(entry.profile, min(r, len(entry.profile))),
            entry.profile.cross_energy,
            entry.profile.delta_fro,
        )
        for entry in report
    ]
    write_csv(path, SUMMARY_HEADER, rows)
