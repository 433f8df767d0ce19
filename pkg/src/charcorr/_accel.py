"""Optional numba acceleration.

The batched determinant and Pfaffian kernels in :mod:`charcorr._kernels`
come in two flavours: an ``@njit`` loop and a vectorized numpy version.
Setting the environment variable ``CHARCORR_DISABLE_NUMBA=1`` (or running
without numba installed) selects the numpy versions. The flag is read once
at import time.
"""
from __future__ import annotations

import os

ENV_FLAG = "CHARCORR_DISABLE_NUMBA"

try:
    import numba as _numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None
    NUMBA_AVAILABLE = False


def numba_disabled() -> bool:
    return os.environ.get(ENV_FLAG, "").strip().lower() not in ("", "0", "false", "no")


USE_NUMBA = NUMBA_AVAILABLE and not numba_disabled()


def njit(fn):
    """Compile ``fn`` with numba when available, else return ``None``.

    Returning ``None`` rather than the plain Python function makes accidental
    use of an uncompiled loop on large batches impossible.
    """
    if not NUMBA_AVAILABLE:
        return None
    return _numba.njit(cache=True, nogil=True)(fn)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
