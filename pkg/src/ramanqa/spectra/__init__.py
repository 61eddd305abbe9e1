"""Spectra preprocessing, peak fitting, and synthetic scan generation."""

from .types import FittedPeak, Spectrum
from .pipeline import (
    als_baseline,
    filter_confidence,
    fit_peaks,
    process_spectrum,
    remove_spikes,
    savitzky_golay,
)
from .synthetic import (
    PlantedPeak,
    PlantedPeakRecord,
    ScanTruthRecord,
    SyntheticScanTruth,
    generate_synthetic_scan,
    plant_scan,
)

__all__ = [
    "Spectrum",
    "FittedPeak",
    "remove_spikes",
    "savitzky_golay",
    "als_baseline",
    "fit_peaks",
    "filter_confidence",
    "process_spectrum",
    "PlantedPeak",
    "PlantedPeakRecord",
    "ScanTruthRecord",
    "SyntheticScanTruth",
    "plant_scan",
    "generate_synthetic_scan",
]
