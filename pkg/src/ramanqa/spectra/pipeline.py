"""Preprocessing and peak extraction for single spectra.

The pipeline order is despike -> Savitzky-Golay smoothing -> asymmetric
least squares baseline subtraction -> Gaussian peak fitting -> family
assignment -> confidence filtering. Every function is pure: new arrays in,
new values out, no shared state.
"""

from __future__ import annotations

import functools

import numpy as np
from scipy.optimize import least_squares

from ..errors import SpectrumError
from ..families import assign_family
from .kernels import (
    despike_kernel,
    gaussian_sum_kernel,
    penalized_smooth_kernel,
    sg_apply_kernel,
)
from .types import FittedPeak, Spectrum

DEFAULT_SG_WINDOW = 31
DEFAULT_SG_POLYORDER = 3
DEFAULT_ALS_LAM = 1e5
DEFAULT_ALS_P = 0.01
DEFAULT_ALS_ITERS = 10
DEFAULT_CONFIDENCE_THRESHOLD = 0.98

# Candidates closer than this (cm^-1) are merged before fitting; below
# typical Raman linewidths, so real doublets survive.
RESOLUTION_FLOOR = 5.0

# Seeding floor: max(rel * max intensity, mult * robust noise sigma). The
# noise term keeps smoothed noise bumps (which survive baseline
# subtraction with ALS's low-envelope bias) out of the fit.
HEIGHT_FLOOR_REL = 0.02
HEIGHT_FLOOR_NOISE_MULT = 5.0

# At most this many Gaussians enter the joint fit (tallest win); bounds the
# least-squares problem size on pathological inputs.
MAX_FIT_COMPONENTS = 16


def remove_spikes(
    spec: Spectrum, z_threshold: float = 3.5, floor_fraction: float = 0.1
) -> Spectrum:
    """Replace impulse spikes with the mean of their nearest clean neighbors.

    Detection is a modified z-score on second differences with an absolute
    deviation floor relative to the signal range; spike-free input passes
    through unchanged.
    """
    cleaned, _ = despike_kernel(spec.intensities, z_threshold, floor_fraction)
    return spec.with_intensities(cleaned)


@functools.lru_cache(maxsize=32)
def _sg_coefficient_rows(window: int, polyorder: int):
    """Rows of the least-squares smoother matrix for one window shape.

    Returns (mid, left, right): the centered row applied to interior
    windows plus the off-center rows used to refit the ``window // 2``
    points at each edge against the first/last full window.
    """
    positions = np.arange(window, dtype=np.float64)
    basis = np.vander(positions, polyorder + 1, increasing=True)
    smoother = basis @ np.linalg.pinv(basis)  # projection onto the poly space
    half = window // 2
    mid = np.ascontiguousarray(smoother[half])
    left = np.ascontiguousarray(smoother[:half])
    right = np.ascontiguousarray(smoother[half + 1 :])
    return mid, left, right


def savitzky_golay(
    spec: Spectrum,
    window: int = DEFAULT_SG_WINDOW,
    polyorder: int = DEFAULT_SG_POLYORDER,
) -> Spectrum:
    """Least-squares polynomial smoothing over sliding windows.

    Interior points take the value of the degree-``polyorder`` fit over
    their centered window; edge points are refit over the first/last full
    window (asymmetric evaluation).
    """
    n = spec.intensities.size
    if window % 2 == 0:
        raise SpectrumError(f"window must be odd, got {window}")
    if window < 3:
        raise SpectrumError(f"window must be >= 3, got {window}")
    if window > n:
        raise SpectrumError(f"window {window} exceeds spectrum length {n}")
    if polyorder < 0 or polyorder >= window:
        raise SpectrumError(
            f"polyorder must satisfy 0 <= polyorder < window, got {polyorder}"
        )
    mid, left, right = _sg_coefficient_rows(window, polyorder)
    smoothed = sg_apply_kernel(spec.intensities, mid, left, right)
    return spec.with_intensities(smoothed)


def als_baseline(
    spec: Spectrum,
    lam: float = DEFAULT_ALS_LAM,
    p: float = DEFAULT_ALS_P,
    iters: int = DEFAULT_ALS_ITERS,
) -> np.ndarray:
    """Asymmetric least squares baseline estimate (not subtracted here).

    Iterates a penalized least-squares smooth with asymmetric weights:
    points above the current baseline get weight ``p``, points below get
    ``1 - p``, so the solution tracks the signal floor under peaks.
    """
    if not lam > 0:
        raise SpectrumError(f"lam must be > 0, got {lam}")
    if not 0.0 < p < 1.0:
        raise SpectrumError(f"p must lie strictly in (0, 1), got {p}")
    if iters < 1:
        raise SpectrumError(f"iters must be >= 1, got {iters}")
    y = spec.intensities
    weights = np.ones(y.size)
    z = y
    for _ in range(iters):
        z = penalized_smooth_kernel(y, weights, float(lam))
        weights = np.where(y > z, p, 1.0 - p)
    return z


def subtract_baseline(spec: Spectrum, **als_params) -> Spectrum:
    """Convenience: estimate the ALS baseline and subtract it."""
    baseline = als_baseline(spec, **als_params)
    return spec.with_intensities(spec.intensities - baseline)


def _seed_candidates(x, y, height_floor, resolution_floor):
    """Local maxima above the floor, merged within the resolution floor."""
    idx = []
    for i in range(1, y.size - 1):
        if y[i] >= height_floor and y[i] > y[i - 1] and y[i] >= y[i + 1]:
            idx.append(i)
    merged: list[int] = []
    for i in idx:
        if merged and x[i] - x[merged[-1]] < resolution_floor:
            if y[i] > y[merged[-1]]:
                merged[-1] = i
        else:
            merged.append(i)
    return merged


def _initial_fwhm(x, y, i):
    """Half-max crossing estimate around local maximum ``i``."""
    half = y[i] / 2.0
    lo = i
    while lo > 0 and y[lo] > half:
        lo -= 1
    hi = i
    while hi < y.size - 1 and y[hi] > half:
        hi += 1
    est = x[hi] - x[lo]
    dx = x[1] - x[0]
    return float(min(max(est, 2.0 * dx), (x[-1] - x[0]) / 4.0))


def _peak_confidence(x, y, model, center, height, fwhm):
    """1 - normalized RMS residual over the peak window, clamped to [0, 1].

    The window is center +- FWHM and the residual is normalized by the
    fitted height, so a clean fit scores ~1 and pure noise scores low.
    """
    mask = np.abs(x - center) <= fwhm
    if height <= 0 or not np.any(mask):
        return 0.0
    rms = float(np.sqrt(np.mean((model[mask] - y[mask]) ** 2)))
    return float(min(1.0, max(0.0, 1.0 - rms / height)))


def _fit_gaussians(x, y, seeds, span, response=None):
    """Jointly fit one Gaussian per seed; returns flat parameter array or None.

    ``response``, when given, maps a model trace through the same linear
    distortion the measured signal went through (e.g. the smoothing
    filter), so fitted parameters describe the undistorted peaks.
    """
    p0 = []
    lower = []
    upper = []
    for i, fwhm0 in seeds:
        p0 += [x[i], y[i], fwhm0]
        lower += [x[0], 0.0, x[1] - x[0]]
        upper += [x[-1], np.inf, span]

    def residual(params):
        c = np.ascontiguousarray(params[0::3])
        h = np.ascontiguousarray(params[1::3])
        w = np.ascontiguousarray(params[2::3])
        model = gaussian_sum_kernel(x, c, h, w)
        if response is not None:
            model = response(model)
        return model - y

    result = least_squares(
        residual,
        np.asarray(p0),
        bounds=(np.asarray(lower), np.asarray(upper)),
        method="trf",
        max_nfev=200 * len(seeds),
    )
    if not result.success or not np.all(np.isfinite(result.x)):
        return None
    return result.x


def estimate_noise_sigma(y: np.ndarray) -> float:
    """Robust noise scale: MAD around the median (peaks occupy few channels)."""
    med = np.median(y)
    return float(1.4826 * np.median(np.abs(y - med)))


def fit_peaks(
    spec: Spectrum,
    height_floor: float | None = None,
    resolution_floor: float = RESOLUTION_FLOOR,
    max_components: int = MAX_FIT_COMPONENTS,
    response=None,
) -> list[FittedPeak]:
    """Fit Gaussian peaks to a smoothed, baseline-corrected spectrum.

    Candidates are seeded at local maxima above ``height_floor`` (default:
    2% of the maximum intensity or 5x the robust noise sigma, whichever is
    larger), merged within ``resolution_floor``, then jointly refined by
    nonlinear least squares. If the joint fit fails, candidates are refit
    one at a time and individual failures dropped. Returned peaks are
    sorted by center.

    ``response`` (optional callable) maps model traces through the same
    linear distortion the input went through (the pipeline passes its
    smoothing filter here, so heights and confidences are judged against
    the shape the filter actually produces).
    """
    x = spec.wavenumbers
    y = spec.intensities
    ymax = float(y.max(initial=0.0))
    if height_floor is None:
        height_floor = max(
            HEIGHT_FLOOR_REL * ymax,
            HEIGHT_FLOOR_NOISE_MULT * estimate_noise_sigma(y),
        )
    if ymax <= 0 or height_floor <= 0:
        return []

    seeds_idx = _seed_candidates(x, y, height_floor, resolution_floor)
    if not seeds_idx:
        return []
    if len(seeds_idx) > max_components:
        seeds_idx = sorted(
            sorted(seeds_idx, key=lambda i: -y[i])[:max_components]
        )
    seeds = [(i, _initial_fwhm(x, y, i)) for i in seeds_idx]
    span = spec.span

    params = _fit_gaussians(x, y, seeds, span, response)
    fitted: list[tuple[float, float, float]] = []
    if params is not None:
        fitted = [
            (params[3 * k], params[3 * k + 1], params[3 * k + 2])
            for k in range(len(seeds))
        ]
    else:
        for seed in seeds:
            single = _fit_gaussians(x, y, [seed], span, response)
            if single is not None:
                fitted.append((single[0], single[1], single[2]))

    # Drop vanishing or degenerate components, then re-enforce the
    # resolution floor on fitted centers (keep the taller of a close pair).
    fitted = [
        (c, h, w)
        for c, h, w in fitted
        if h >= 0.5 * height_floor and 0 < w < span and x[0] <= c <= x[-1]
    ]
    fitted.sort(key=lambda t: t[0])
    kept: list[tuple[float, float, float]] = []
    for c, h, w in fitted:
        if kept and c - kept[-1][0] < resolution_floor:
            if h > kept[-1][1]:
                kept[-1] = (c, h, w)
        else:
            kept.append((c, h, w))

    if not kept:
        return []
    centers = np.ascontiguousarray([c for c, _, _ in kept])
    heights = np.ascontiguousarray([h for _, h, _ in kept])
    widths = np.ascontiguousarray([w for _, _, w in kept])
    model = gaussian_sum_kernel(x, centers, heights, widths)
    if response is not None:
        model = response(model)
    return [
        FittedPeak(
            center=float(c),
            height=float(h),
            width=float(w),
            confidence=_peak_confidence(x, y, model, c, h, w),
        )
        for c, h, w in kept
    ]


def filter_confidence(
    peaks: list[FittedPeak], threshold: float = DEFAULT_CONFIDENCE_THRESHOLD
) -> list[FittedPeak]:
    """Keep peaks with confidence >= threshold, preserving order."""
    if not 0.0 <= threshold <= 1.0:
        raise SpectrumError(f"threshold must lie in [0, 1], got {threshold}")
    return [p for p in peaks if p.confidence >= threshold]


def process_spectrum(
    spec: Spectrum,
    sg_window: int = DEFAULT_SG_WINDOW,
    sg_polyorder: int = DEFAULT_SG_POLYORDER,
    als_lam: float = DEFAULT_ALS_LAM,
    als_p: float = DEFAULT_ALS_P,
    als_iters: int = DEFAULT_ALS_ITERS,
    confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD,
    height_floor: float | None = None,
) -> list[tuple[FittedPeak, str]]:
    """Full pipeline for one spectrum: returns (peak, family) pairs.

    Peaks whose center falls outside every family assignment window are
    discarded, matching the schema's absence semantics.
    """
    cleaned = remove_spikes(spec)
    smoothed = savitzky_golay(cleaned, window=sg_window, polyorder=sg_polyorder)
    corrected = subtract_baseline(smoothed, lam=als_lam, p=als_p, iters=als_iters)
    mid, left, right = _sg_coefficient_rows(sg_window, sg_polyorder)
    smooth_response = lambda m: sg_apply_kernel(m, mid, left, right)  # noqa: E731
    peaks = fit_peaks(corrected, height_floor=height_floor, response=smooth_response)
    peaks = filter_confidence(peaks, threshold=confidence_threshold)
    out = []
    for peak in peaks:
        family = assign_family(peak.center)
        if family is not None:
            out.append((peak, family))
    return out
