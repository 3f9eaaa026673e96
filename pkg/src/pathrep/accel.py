"""Optional numba acceleration for the hot numeric kernels.

Set ``PIM_NUMBA=0`` to force the pure-Python/numpy fallback (same
functions, uncompiled).  Both paths execute identical arithmetic, so
results are bit-identical either way.  ``PIM_THREADS`` caps the numba
thread pool when compilation is enabled.
"""

import os

USE_NUMBA = os.environ.get("PIM_NUMBA", "1") != "0"

if USE_NUMBA:
    try:
        import numba
    except ImportError:  # pragma: no cover
        USE_NUMBA = False

if USE_NUMBA:
    threads = os.environ.get("PIM_THREADS")
    if threads:
        numba.set_num_threads(max(1, int(threads)))


def maybe_jit(func):
    """Compile ``func`` with numba unless the fallback is selected."""
    if USE_NUMBA:
        return numba.njit(cache=True)(func)
    return func
