"""Numba acceleration switch.

Hot kernels in :mod:`popseq.kernels` are written as plain Python loops over
numpy arrays. When numba is installed they are JIT-compiled at import time;
otherwise (or when ``POPSEQ_DISABLE_NUMBA`` is set to a non-empty value other
than ``"0"``) the interpreted versions run as-is. Both paths execute the same
statements in the same order, so results are identical either way.
"""

from __future__ import annotations

import os

ENV_FLAG = "POPSEQ_DISABLE_NUMBA"

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional dependency
    numba = None
    HAS_NUMBA = False


def numba_disabled() -> bool:
    return os.environ.get(ENV_FLAG, "") not in ("", "0")


USE_NUMBA = HAS_NUMBA and not numba_disabled()


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
