"""Kernel backend selection.

Set DDSCHUR_BACKEND=numba or DDSCHUR_BACKEND=numpy to pick the kernel set;
the default is numba when it imports, with a silent fallback to the pure
numpy kernels otherwise.  The choice is made once, at import time, so that
decorated scalar helpers compile exactly once per process.
"""

import os

_requested = os.environ.get("DDSCHUR_BACKEND", "").strip().lower()
if _requested not in ("", "numba", "numpy"):
    raise ValueError(
        "DDSCHUR_BACKEND must be 'numba' or 'numpy', got %r" % _requested
    )

if _requested in ("", "numba"):
    try:
        import numba
        USE_NUMBA = True
    except ImportError:
        if _requested == "numba":
            raise
        numba = None
        USE_NUMBA = False
else:
    numba = None
    USE_NUMBA = False

BACKEND = "numba" if USE_NUMBA else "numpy"


def scalar_jit(fn):
    """Compile a scalar helper under the numba backend; identity otherwise.

    fastmath stays off everywhere in this package: the error-free
    transformations rely on IEEE adds and muls being individually exact,
    and fastmath licenses the reassociations that destroy that.
    """
    if USE_NUMBA:
        return numba.njit(cache=True)(fn)
    return fn
