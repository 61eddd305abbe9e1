"""Hot numeric kernels shared by the preprocessing pipeline.

Each kernel is plain numpy/loop code compiled through ``backend.jit``;
see ``backend.py`` for how the numba/numpy path is selected. Kernels do no
argument validation — callers in ``pipeline.py`` own the preconditions.
"""

from __future__ import annotations

import numpy as np

from .backend import jit

# FWHM of a Gaussian = 2*sqrt(2*ln 2) * sigma
SIGMA_PER_FWHM: float = 1.0 / (2.0 * np.sqrt(2.0 * np.log(2.0)))


@jit
def despike_kernel(y, z_threshold, floor_fraction):
    """Flag impulse spikes and replace them with neighbor means.

    Spikes are channels whose second difference deviates from the median
    by more than ``z_threshold`` in modified z-score units, with an
    absolute floor of ``floor_fraction`` of the signal range so smooth
    noiseless features never trip the (collapsed) robust scale. Flagged
    channels are replaced by the mean of the nearest unflagged neighbor on
    each side. Returns ``(cleaned, flags)``.
    """
    n = y.size
    out = y.copy()
    flags = np.zeros(n, dtype=np.bool_)
    if n < 3:
        return out, flags

    d = np.empty(n - 2)
    for i in range(1, n - 1):
        d[i - 1] = y[i + 1] - 2.0 * y[i] + y[i - 1]
    med = np.median(d)
    dev = np.abs(d - med)
    mad = np.median(dev)
    if mad > 0.0:
        scale = mad / 0.6745
    else:
        # Degenerate robust scale (mostly-flat signal): fall back to the
        # mean absolute deviation so an isolated impulse still stands out.
        m = np.mean(dev)
        scale = m / 0.6745 if m > 0.0 else 0.0

    floor = floor_fraction * (np.max(y) - np.min(y))
    for i in range(1, n - 1):
        dv = dev[i - 1]
        if dv <= floor:
            continue
        if scale == 0.0 or dv / scale > z_threshold:
            flags[i] = True

    for i in range(n):
        if not flags[i]:
            continue
        left = np.nan
        j = i - 1
        while j >= 0:
            if not flags[j]:
                left = y[j]
                break
            j -= 1
        right = np.nan
        j = i + 1
        while j < n:
            if not flags[j]:
                right = y[j]
                break
            j += 1
        if not np.isnan(left) and not np.isnan(right):
            out[i] = 0.5 * (left + right)
        elif not np.isnan(left):
            out[i] = left
        elif not np.isnan(right):
            out[i] = right
    return out, flags


@jit
def sg_apply_kernel(y, c_mid, c_left, c_right):
    """Apply precomputed Savitzky-Golay coefficient rows.

    ``c_mid`` smooths interior points over centered windows; ``c_left`` and
    ``c_right`` are the asymmetric refit rows for the ``half`` points at
    each edge (fit over the first/last full window, evaluated off-center).
    """
    n = y.size
    w = c_mid.size
    half = w // 2
    out = np.empty(n)
    for i in range(half, n - half):
        acc = 0.0
        for j in range(w):
            acc += c_mid[j] * y[i - half + j]
        out[i] = acc
    for e in range(half):
        acc = 0.0
        for j in range(w):
            acc += c_left[e, j] * y[j]
        out[e] = acc
        acc = 0.0
        for j in range(w):
            acc += c_right[e, j] * y[n - w + j]
        out[n - half + e] = acc
    return out


@jit
def penalized_smooth_kernel(y, weights, lam):
    """Solve ``(W + lam * D2' D2) z = W y`` for the smooth baseline ``z``.

    D2 is the (n-2) x n second-difference operator, so the system matrix is
    symmetric positive-definite pentadiagonal; it is factorized in-place
    with a bandwidth-2 LDL^T (no pivoting needed for SPD). One call is one
    reweighting step of the asymmetric least squares iteration.
    """
    n = y.size
    diag = np.zeros(n)
    sub1 = np.zeros(n - 1)
    sub2 = np.zeros(n - 2)
    # Accumulate lam * D2'D2 from the (1, -2, 1) rows of D2.
    for k in range(n - 2):
        diag[k] += lam
        diag[k + 1] += 4.0 * lam
        diag[k + 2] += lam
        sub1[k] += -2.0 * lam
        sub1[k + 1] += -2.0 * lam
        sub2[k] += lam
    for i in range(n):
        diag[i] += weights[i]
    b = weights * y

    dh = np.empty(n)
    l1 = np.zeros(n - 1)
    l2 = np.zeros(n - 2)
    for i in range(n):
        v = diag[i]
        if i >= 1:
            v -= l1[i - 1] * l1[i - 1] * dh[i - 1]
        if i >= 2:
            v -= l2[i - 2] * l2[i - 2] * dh[i - 2]
        dh[i] = v
        if i + 1 < n:
            t = sub1[i]
            if i >= 1:
                t -= l2[i - 1] * l1[i - 1] * dh[i - 1]
            l1[i] = t / v
        if i + 2 < n:
            l2[i] = sub2[i] / v

    u = np.empty(n)
    for i in range(n):
        v = b[i]
        if i >= 1:
            v -= l1[i - 1] * u[i - 1]
        if i >= 2:
            v -= l2[i - 2] * u[i - 2]
        u[i] = v
    z = np.empty(n)
    for i in range(n - 1, -1, -1):
        v = u[i] / dh[i]
        if i + 1 < n:
            v -= l1[i] * z[i + 1]
        if i + 2 < n:
            v -= l2[i] * z[i + 2]
        z[i] = v
    return z


@jit
def gaussian_sum_kernel(x, centers, heights, fwhms):
    """Sum of Gaussian profiles parameterized by (center, height, FWHM)."""
    out = np.zeros(x.size)
    for k in range(centers.size):
        sigma = fwhms[k] * SIGMA_PER_FWHM
        t = (x - centers[k]) / sigma
        out += heights[k] * np.exp(-0.5 * t * t)
    return out
