"""Optional numba acceleration.

Set ``FPTSIM_DISABLE_NUMBA=1`` before import to force the pure-numpy
kernels. Results do not depend on the backend beyond last-ulp differences
in ``exp``/``log``.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is optional
    numba = None

NUMBA_DISABLED = os.environ.get("FPTSIM_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")
HAVE_NUMBA = numba is not None and not NUMBA_DISABLED


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise a no-op decorator."""
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn
