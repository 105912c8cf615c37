"""Numba switch.

Set ``HWQAOA_DISABLE_NUMBA=1`` (any value other than ``0``/empty) before import
to force the pure-numpy kernels. Numba is otherwise used when importable.
"""
import os

_flag = os.environ.get("HWQAOA_DISABLE_NUMBA", "").strip().lower()
DISABLED = _flag not in ("", "0", "false", "no")

try:
    if DISABLED:
        raise ImportError
    from numba import njit as _njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False
    _njit = None


def njit(fn):
    """``numba.njit(cache=True)`` when available, else ``None``.

    Callers keep a numpy twin and dispatch on ``HAS_NUMBA``.
    """
    if not HAS_NUMBA:
        return None
    return _njit(cache=True)(fn)
