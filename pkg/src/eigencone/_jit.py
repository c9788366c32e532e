"""numba switch.

Set ``EIGENCONE_DISABLE_JIT=1`` to force the pure-numpy kernels even when
numba is importable.  The choice is made once, at import time.
"""

import logging
import os

DISABLE_ENV = "EIGENCONE_DISABLE_JIT"

try:
    import numba

    logging.getLogger("numba").setLevel(logging.WARNING)
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_JIT = HAVE_NUMBA and os.environ.get(DISABLE_ENV, "").strip().lower() not in {"1", "true", "yes", "on"}


def njit(func):
    """Compile ``func`` with numba when available, else return it unchanged."""
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True, nogil=True)(func)
