"""Selects the hypervolume kernel backend.

``COMOCMA_BACKEND=numpy`` forces the vectorized fallback;
``COMOCMA_BACKEND=numba`` insists on the compiled kernels (import error if
numba is missing). By default the compiled kernels are used when numba
imports cleanly. ``benchmarks/bench_backends.py`` compares the two.
"""

from __future__ import annotations

import os
import warnings

_requested = os.environ.get("COMOCMA_BACKEND", "").strip().lower()
if _requested not in ("", "numba", "numpy"):
    raise RuntimeError(
        "COMOCMA_BACKEND must be 'numba' or 'numpy', got %r" % _requested)

if _requested == "numpy":
    from . import _hv_numpy as kernels
    BACKEND = "numpy"
else:
    try:
        from . import _hv_numba as kernels
        BACKEND = "numba"
    except ImportError:
        if _requested == "numba":
            raise
        warnings.warn("numba is unavailable; using the slower numpy kernels",
                      RuntimeWarning)
        from . import _hv_numpy as kernels
        BACKEND = "numpy"

__all__ = ["kernels", "BACKEND"]
