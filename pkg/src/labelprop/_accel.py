"""JIT switch for the hot kernels.

Kernels are written once in numba-compatible Python. Set
``LABELPROP_DISABLE_JIT=1`` before import to run them under the plain
interpreter (the numpy fallback path); results are identical either way
because kernels take all randomness as pre-drawn arrays.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_DISABLED = os.environ.get("LABELPROP_DISABLE_JIT", "").strip().lower() not in ("", "0", "false", "no")

JIT_ENABLED = numba is not None and not _DISABLED

_jit_options = {
    "nogil": True,
    "cache": True,
    "fastmath": False,
    "boundscheck": False,
}


def njit(fn):
    """Compile ``fn`` with numba when enabled, else return it unchanged."""
    if not JIT_ENABLED:
        return fn
    return numba.njit(**_jit_options)(fn)


def py_func(fn):
    """Return the interpreted version of a (possibly compiled) kernel."""
    return getattr(fn, "py_func", fn)


def backend_name():
    return "numba" if JIT_ENABLED else "numpy"
