"""Kernel backend selection.

The hot loops live in two interchangeable modules: ``_numba_kernels`` (compiled
with ``numba.njit``) and ``_numpy_kernels`` (vectorized numpy, no compiler).
``YULETREE_BACKEND=numpy`` forces the fallback; the default is numba when it
imports cleanly.
"""

import os

_requested = os.environ.get("YULETREE_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"YULETREE_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

BACKEND = "numba" if (_requested == "numba" and HAVE_NUMBA) else "numpy"


def thread_count():
    """Worker threads for trial loops, capped by ``YULE_THREADS`` (default 1)."""
    raw = os.environ.get("YULE_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"YULE_THREADS must be an integer, got {raw!r}") from None
    return max(1, n)
