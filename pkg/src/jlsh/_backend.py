"""Kernel backend selection.

The hot kernels exist in two lanes: numba @njit and pure numpy. The lane
is picked once at import time from the JLSH_BACKEND environment variable:

  JLSH_BACKEND=numba   require numba (ImportError if missing)
  JLSH_BACKEND=numpy   force the pure-numpy fallback
  unset / auto         numba when importable, else numpy

Both lanes compute the same results (integer hashes identical, float
accumulations within 1e-12); ``jlsh.bench`` times them side by side.
"""

from __future__ import annotations

import os

ENV_VAR = "JLSH_BACKEND"

_choice = os.environ.get(ENV_VAR, "auto").strip().lower()
if _choice not in ("auto", "numba", "numpy"):
    raise ValueError(f"{ENV_VAR} must be 'numba', 'numpy' or unset, got {_choice!r}")

if _choice == "numpy":
    NUMBA_AVAILABLE = False
else:
    try:
        import numba  # noqa: F401

        NUMBA_AVAILABLE = True
    except ImportError:
        if _choice == "numba":
            raise
        NUMBA_AVAILABLE = False

ACTIVE = "numba" if NUMBA_AVAILABLE else "numpy"


def active_backend() -> str:
    """Name of the lane picked at import time ('numba' or 'numpy')."""
    return ACTIVE
