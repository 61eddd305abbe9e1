"""Benchmark the hot preprocessing kernels: numba backend vs numpy fallback.

Run both paths (the numba path is whatever RAMANQA_NUMBA selects at import,
the fallback is the same source uncompiled via ``.py_func``):

    python3 benchmarks/bench_kernels.py [--channels 2601] [--repeats 20]

At scan scale (114 timesteps x 900 positions in the motivating dataset) the
per-spectrum kernel cost dominates ingest, which is why these carry @njit.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ramanqa.spectra import backend
from ramanqa.spectra.kernels import (
    despike_kernel,
    gaussian_sum_kernel,
    penalized_smooth_kernel,
    sg_apply_kernel,
)
from ramanqa.spectra.pipeline import _sg_coefficient_rows


def timeit(fn, args, repeats: int) -> float:
    fn(*args)  # warmup (and JIT compile on the numba path)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--channels", type=int, default=2601)
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    n = args.channels
    rng = np.random.default_rng(0)
    y = 50.0 + 20.0 * np.sin(np.linspace(0, 6, n)) + rng.normal(0, 1.5, n)
    y[n // 3] += 4000.0
    weights = rng.uniform(0.01, 1.0, n)
    mid, left, right = _sg_coefficient_rows(31, 3)
    x = np.linspace(100.0, 2700.0, n)
    centers = np.array([595.5, 1330.5, 1596.8])
    heights = np.array([120.0, 200.0, 150.0])
    fwhms = np.array([12.0, 25.0, 18.0])

    cases = [
        ("despike", despike_kernel, (y, 3.5, 0.1)),
        ("sg_apply(w=31)", sg_apply_kernel, (y, mid, left, right)),
        ("penalized_solve", penalized_smooth_kernel, (y, weights, 1e5)),
        ("gaussian_sum(3)", gaussian_sum_kernel, (x, centers, heights, fwhms)),
    ]

    active = backend.backend_name()
    print(f"channels={n} repeats={args.repeats} active_backend={active}")
    print(f"{'kernel':<18} {'numpy (ms)':>12} {'numba (ms)':>12} {'speedup':>9}")
    for name, fn, fn_args in cases:
        plain = getattr(fn, "py_func", fn)
        t_plain = timeit(plain, fn_args, args.repeats) * 1e3
        if backend.USE_NUMBA:
            t_jit = timeit(fn, fn_args, args.repeats) * 1e3
            print(f"{name:<18} {t_plain:>12.3f} {t_jit:>12.3f} {t_plain / t_jit:>8.1f}x")
        else:
            print(f"{name:<18} {t_plain:>12.3f} {'n/a':>12} {'n/a':>9}")
    if not backend.USE_NUMBA:
        print("numba backend inactive (RAMANQA_NUMBA=0 or numba missing); "
              "only the numpy path was timed")


if __name__ == "__main__":
    main()
