"""Seeded synthetic scans with exact ground truth for pipeline tests."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import SpectrumError
from ..families import ASSIGNMENT_WINDOW, CANONICAL_CENTERS
from .kernels import gaussian_sum_kernel
from .types import Spectrum


@dataclass(frozen=True)
class PlantedPeak:
    """Template peak planted at every grid position."""

    family: str
    center: float
    height: float
    width: float


@dataclass(frozen=True)
class SyntheticScanTruth:
    """Deterministic description of a synthetic scan.

    ``center_jitter`` and ``height_jitter`` perturb each planted peak per
    (ts, x, y) position, drawn from the seeded generator; the exact planted
    values are recorded in the truth record, so jitter never weakens the
    ground truth.
    """

    seed: int
    nx: int
    ny: int
    timesteps: int
    peaks: tuple[PlantedPeak, ...]
    noise_level: float = 0.0
    baseline_coeffs: tuple[float, ...] = ()
    center_jitter: float = 0.0
    height_jitter: float = 0.0
    wn_start: float = 100.0
    wn_stop: float = 2700.0
    wn_step: float = 1.0

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1 or self.timesteps < 1:
            raise SpectrumError("grid dims and timesteps must all be >= 1")
        if self.noise_level < 0:
            raise SpectrumError("noise_level must be >= 0")
        if not 0.0 <= self.height_jitter < 1.0:
            raise SpectrumError("height_jitter must lie in [0, 1)")
        if self.center_jitter < 0:
            raise SpectrumError("center_jitter must be >= 0")
        for pk in self.peaks:
            if pk.family not in CANONICAL_CENTERS:
                raise SpectrumError(f"unknown family {pk.family!r}")
            canon = CANONICAL_CENTERS[pk.family]
            reach = abs(pk.center - canon) + self.center_jitter
            if reach > ASSIGNMENT_WINDOW:
                raise SpectrumError(
                    f"peak {pk.family!r} at {pk.center} with jitter "
                    f"{self.center_jitter} can leave the assignment window"
                )
            if pk.height <= 0 or pk.width <= 0:
                raise SpectrumError("planted height and width must be > 0")

    @property
    def positions(self) -> int:
        return self.nx * self.ny * self.timesteps

    def wavenumbers(self) -> np.ndarray:
        return np.arange(self.wn_start, self.wn_stop + 0.5 * self.wn_step, self.wn_step)


@dataclass(frozen=True)
class PlantedPeakRecord:
    """One peak actually planted at one position (exact values)."""

    ts: int
    x: int
    y: int
    family: str
    center: float
    height: float
    width: float


@dataclass
class ScanTruthRecord:
    """Everything planted, in generation order."""

    config: SyntheticScanTruth
    planted: list[PlantedPeakRecord] = field(default_factory=list)

    def at(self, ts: int, x: int, y: int) -> list[PlantedPeakRecord]:
        return [p for p in self.planted if (p.ts, p.x, p.y) == (ts, x, y)]


def _iter_positions(truth: SyntheticScanTruth):
    for ts in range(truth.timesteps):
        for x in range(truth.nx):
            for y in range(truth.ny):
                yield ts, x, y


def plant_scan(truth: SyntheticScanTruth) -> ScanTruthRecord:
    """Draw the exact planted parameters for every position (no spectra)."""
    rng = np.random.default_rng(truth.seed)
    record = ScanTruthRecord(config=truth)
    for ts, x, y in _iter_positions(truth):
        for pk in truth.peaks:
            u_center, u_height = rng.uniform(-1.0, 1.0, size=2)
            center = pk.center + truth.center_jitter * u_center
            height = pk.height * (1.0 + truth.height_jitter * u_height)
            record.planted.append(
                PlantedPeakRecord(
                    ts=ts,
                    x=x,
                    y=y,
                    family=pk.family,
                    center=float(center),
                    height=float(height),
                    width=pk.width,
                )
            )
    return record


def generate_synthetic_scan(
    truth: SyntheticScanTruth,
) -> tuple[list[Spectrum], ScanTruthRecord]:
    """Synthesize spectra (baseline + planted Gaussians + noise) plus truth.

    Deterministic in the seed: two calls with the same config produce
    byte-identical spectra and identical truth records.
    """
    record = plant_scan(truth)
    wn = truth.wavenumbers()
    u = (wn - truth.wn_start) / (truth.wn_stop - truth.wn_start)
    baseline = np.zeros_like(wn)
    for j, coeff in enumerate(truth.baseline_coeffs):
        baseline += coeff * u**j

    # Noise is drawn from a second seeded stream so planted parameters do
    # not depend on the noise level.
    noise_rng = np.random.default_rng(truth.seed + 1)
    spectra: list[Spectrum] = []
    i = 0
    per_pos = len(truth.peaks)
    for ts, x, y in _iter_positions(truth):
        rows = record.planted[i : i + per_pos]
        i += per_pos
        centers = np.ascontiguousarray([r.center for r in rows])
        heights = np.ascontiguousarray([r.height for r in rows])
        widths = np.ascontiguousarray([r.width for r in rows])
        signal = baseline + gaussian_sum_kernel(wn, centers, heights, widths)
        if truth.noise_level > 0:
            signal = signal + noise_rng.normal(0.0, truth.noise_level, wn.size)
        spectra.append(Spectrum(wn, signal, ts=ts, x=x, y=y))
    return spectra, record
