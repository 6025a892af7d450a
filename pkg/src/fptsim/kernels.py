"""Backend selection for the hot loops.

``BACKEND`` is ``"numba"`` unless numba is missing or disabled through the
``FPTSIM_DISABLE_NUMBA`` environment variable. ``get_kernels`` returns a
module exposing ``decide_normalizer``, ``decide_density``, ``q_bracket`` and
``euler_block``.
"""
from types import ModuleType

from . import _kernels_np
from ._accel import HAVE_NUMBA

BACKEND = "numba" if HAVE_NUMBA else "numpy"


def available_backends():
    return ("numba", "numpy") if HAVE_NUMBA else ("numpy",)


def get_kernels(name: str | None = None) -> ModuleType:
    name = name or BACKEND
    if name == "numpy":
        return _kernels_np
    if name == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is unavailable or disabled")
        from . import _kernels_jit

        return _kernels_jit
    raise ValueError(f"unknown backend {name!r}")
