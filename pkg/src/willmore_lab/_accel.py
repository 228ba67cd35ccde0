"""Numba toggle.

Set ``WILLMORE_LAB_NUMBA=0`` to force the pure-numpy kernels. When numba is
missing the numpy path is used regardless of the flag.
"""

from __future__ import annotations

import os
import warnings

try:
    import numba as _numba
except ImportError:  # pragma: no cover - exercised by monkeypatched tests
    _numba = None

NUMBA_AVAILABLE = _numba is not None


def _flag_enabled() -> bool:
    return os.environ.get("WILLMORE_LAB_NUMBA", "1").strip().lower() not in {"0", "false", "no", "off"}


USE_NUMBA = NUMBA_AVAILABLE and _flag_enabled()


# an old system TBB only triggers a harmless fallback notice
warnings.filterwarnings("ignore", message="The TBB threading layer")

if NUMBA_AVAILABLE:
    njit = _numba.njit
    prange = _numba.prange
else:

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(fn):
            return fn

        return wrap

    prange = range


def set_backend(name: str) -> None:
    """Switch kernels between ``"numba"`` and ``"numpy"`` at runtime."""
    global USE_NUMBA
    if name not in {"numba", "numpy"}:
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not NUMBA_AVAILABLE:
        raise RuntimeError("numba is not installed")
    USE_NUMBA = name == "numba"


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
