"""Backend selection for the hot kernels.

Kernels are written once against numpy and compiled with numba when it is
available. Set ``MWE_BACKEND=numpy`` to run them as plain Python/numpy
(useful for debugging and for the benchmark comparison).
"""
import os

BACKEND = os.environ.get("MWE_BACKEND", "numba").strip().lower()
if BACKEND not in ("numba", "numpy"):
    raise ImportError(f"MWE_BACKEND must be 'numba' or 'numpy', got {BACKEND!r}")

if BACKEND == "numba":
    try:
        import numba
    except ImportError:  # pragma: no cover - numba is a declared dependency
        BACKEND = "numpy"

USE_NUMBA = BACKEND == "numba"


def njit(*args, **kwargs):
    """``numba.njit`` when the numba backend is active, identity otherwise."""
    if USE_NUMBA:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn
