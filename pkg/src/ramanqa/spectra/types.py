"""Value types for the spectra pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import SpectrumError

# Acquisition range of the instrument, cm^-1.
WAVENUMBER_MIN = 100.0
WAVENUMBER_MAX = 2700.0


def _as_readonly(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64).copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Spectrum:
    """One (ts, x, y) measurement: intensity counts over ascending wavenumbers.

    Arrays are copied and frozen on construction, so instances are safe to
    share across threads.
    """

    wavenumbers: np.ndarray
    intensities: np.ndarray
    ts: int = 0
    x: int = 0
    y: int = 0

    def __post_init__(self):
        wn = _as_readonly(self.wavenumbers)
        iy = _as_readonly(self.intensities)
        object.__setattr__(self, "wavenumbers", wn)
        object.__setattr__(self, "intensities", iy)
        if wn.ndim != 1 or iy.ndim != 1:
            raise SpectrumError("wavenumbers and intensities must be 1-D")
        if wn.size != iy.size:
            raise SpectrumError(
                f"length mismatch: {wn.size} wavenumbers vs {iy.size} intensities"
            )
        if wn.size < 3:
            raise SpectrumError("spectrum needs at least 3 channels")
        if not np.all(np.diff(wn) > 0):
            raise SpectrumError("wavenumbers must be strictly increasing")
        if wn[0] < WAVENUMBER_MIN - 1e-9 or wn[-1] > WAVENUMBER_MAX + 1e-9:
            raise SpectrumError(
                f"wavenumber span [{wn[0]:g}, {wn[-1]:g}] outside acquisition "
                f"range [{WAVENUMBER_MIN:g}, {WAVENUMBER_MAX:g}]"
            )
        for name in ("ts", "x", "y"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 0:
                raise SpectrumError(f"{name} must be a non-negative integer, got {v!r}")

    @property
    def span(self) -> float:
        return float(self.wavenumbers[-1] - self.wavenumbers[0])

    def with_intensities(self, values) -> "Spectrum":
        """Same coordinates and wavenumber axis, new intensity trace."""
        return Spectrum(self.wavenumbers, values, ts=self.ts, x=self.x, y=self.y)


@dataclass(frozen=True)
class FittedPeak:
    """A fitted Gaussian peak; width is FWHM in cm^-1."""

    center: float
    height: float
    width: float
    confidence: float = field(default=1.0)

    def __post_init__(self):
        if not np.isfinite(self.center):
            raise SpectrumError("peak center must be finite")
        if self.height < 0:
            raise SpectrumError("peak height must be >= 0")
        if self.width <= 0:
            raise SpectrumError("peak width must be > 0")
        if not 0.0 <= self.confidence <= 1.0:
            raise SpectrumError("confidence must lie in [0, 1]")
