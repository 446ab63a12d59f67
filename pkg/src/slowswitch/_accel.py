"""Numba availability and the pure-numpy switch.

Set ``SLOWSWITCH_DISABLE_NUMBA=1`` (any value other than ``0``/``false``/empty)
before import to route every kernel through its numpy implementation.
"""
import os

ENV_FLAG = "SLOWSWITCH_DISABLE_NUMBA"


def _flag_set():
    return os.environ.get(ENV_FLAG, "").strip().lower() not in ("", "0", "false", "no")


try:
    import numba
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and not _flag_set()


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity otherwise."""
    if HAS_NUMBA:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda func: func
