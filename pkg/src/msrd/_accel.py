"""Numba JIT opt-in/opt-out switch for the hot kernels.

The pure-numpy fallback is selected when the ``MSRD_NO_NUMBA`` environment
variable is set (to anything non-empty), when ``NUMBA_DISABLE_JIT`` is set,
or when numba is not importable.  Both code paths are always importable so
they can be compared directly (see ``benchmarks/bench_kernels.py``).
"""

import os


def _numba_available() -> bool:
    try:
        import numba  # noqa: F401
        return True
    except ImportError:
        return False


HAVE_NUMBA = _numba_available()

USE_NUMBA = (
    HAVE_NUMBA
    and not os.environ.get("MSRD_NO_NUMBA")
    and not os.environ.get("NUMBA_DISABLE_JIT")
)

if HAVE_NUMBA:
    from numba import njit
else:
    def njit(*args, **kwargs):
        """Decorator stand-in that returns the function unchanged."""
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
