"""Kernel backend selection: numba-compiled or plain numpy.

The hot numeric kernels in ``kernels.py`` are written once as plain
numpy/loop code and compiled with ``numba.njit`` when the numba backend is
active. Both paths run the same source, so results are identical; numba
only buys speed on full-scan workloads (tens of thousands of spectra).

Selection is controlled by the ``RAMANQA_NUMBA`` environment variable at
import time:

    RAMANQA_NUMBA=0   force the pure-numpy path
    RAMANQA_NUMBA=1   require numba (ImportError if unavailable)
    unset             use numba when importable, else fall back
"""

from __future__ import annotations

import os
from typing import Callable, TypeVar

F = TypeVar("F", bound=Callable)

_FLAG = os.environ.get("RAMANQA_NUMBA", "").strip().lower()


def _numba_importable() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


if _FLAG in {"0", "off", "false", "no"}:
    USE_NUMBA = False
elif _FLAG in {"1", "on", "true", "yes"}:
    if not _numba_importable():
        raise ImportError("RAMANQA_NUMBA=1 but numba is not installed")
    USE_NUMBA = True
else:
    USE_NUMBA = _numba_importable()


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"


def jit(fn: F) -> F:
    """Compile ``fn`` with numba when the numba backend is active."""
    if USE_NUMBA:
        from numba import njit

        return njit(cache=True)(fn)
    return fn
