"""Spectral analysis of weight updates."""

from .profile import SpectralBasis, SpectralProfile, principal_mass, project_update
from .report import (
    LayerSpectrum,
    check_same_architecture,
    spectra_report,
    write_spectra_csv,
    write_summary_csv,
)

__all__ = [
    "LayerSpectrum",
    "SpectralBasis",
    "SpectralProfile",
    "check_same_architecture",
    "principal_mass",
    "project_update",
    "spectra_report",
    "write_spectra_csv",
    "write_summary_csv",
]
