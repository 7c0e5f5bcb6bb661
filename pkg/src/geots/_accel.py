"""Numba detection and the switch between compiled and numpy kernels.

Set ``GEOTS_DISABLE_NUMBA=1`` to force the pure-numpy path even when numba
is importable.
"""
import os

_FALSY = {"", "0", "false", "no", "off"}


def _env_disabled():
    return os.environ.get("GEOTS_DISABLE_NUMBA", "").strip().lower() not in _FALSY


try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _env_disabled()


def njit(func):
    """Compile ``func`` in nopython mode when numba is present.

    The undecorated function stays reachable as ``.py_func`` either way so
    tests can run the interpreted version of the same source.
    """
    if not HAVE_NUMBA:
        func.py_func = func
        return func
    return numba.njit(cache=True, nogil=True)(func)
