"""Optional numba acceleration.

Set ``FEELGOOD_BACKEND=numpy`` to force the pure-numpy kernels even when
numba is importable.  ``njit`` degrades to an identity decorator when numba
is missing or disabled, so the loop kernels stay importable (and callable)
either way.
"""
from __future__ import annotations

import os

_requested = os.environ.get("FEELGOOD_BACKEND", "numba").strip().lower()
if _requested not in {"numba", "numpy"}:
    raise ImportError(f"FEELGOOD_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is an optional extra
    _numba = None

HAVE_NUMBA = _numba is not None
USE_NUMBA = HAVE_NUMBA and _requested == "numba"
BACKEND = "numba" if USE_NUMBA else "numpy"


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` when available, else a no-op decorator."""
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return _numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f
