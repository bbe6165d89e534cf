"""Backend selection for the numerics hot paths.

Two implementations exist for each hot kernel: a numba ``@njit`` version and a
pure-numpy one.  The active backend is chosen at import time from the
``SVCERT_BACKEND`` environment variable (``auto``, ``numba`` or ``numpy``) and
can be switched at runtime with :func:`set_backend` (used by the benchmark
script and by tests that exercise both paths).
"""

import os

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


_VALID = ("auto", "numba", "numpy")
_requested = os.environ.get("SVCERT_BACKEND", "auto").strip().lower()
if _requested not in _VALID:
    raise RuntimeError(
        f"SVCERT_BACKEND must be one of {_VALID}, got {_requested!r}"
    )
if _requested == "numba" and not HAVE_NUMBA:
    raise RuntimeError("SVCERT_BACKEND=numba but numba is not importable")

_use_numba = HAVE_NUMBA and _requested != "numpy"


def use_numba() -> bool:
    """True when the numba backend is active."""
    return _use_numba


def active_backend() -> str:
    return "numba" if _use_numba else "numpy"


def set_backend(name: str) -> None:
    """Switch backend at runtime (``numba`` or ``numpy``)."""
    global _use_numba
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    _use_numba = name == "numba"
