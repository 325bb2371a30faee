"""Hot numerical kernels with backend selection at import time.

The compiled Cython extension is preferred; the pure-Python module is the
fallback and the arithmetic reference.  Set MONOFLOW_PURE=1 to force the
fallback (used by the kernel benchmark and the backend-equality tests).
"""

from __future__ import annotations

import os

from . import _pure

if os.environ.get("MONOFLOW_PURE"):
    _impl = _pure
    BACKEND = "pure"
else:
    try:
        from . import _speedups as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = _pure
        BACKEND = "pure"

thomas_solve = _impl.thomas_solve
projected_sor = _impl.projected_sor

__all__ = ["BACKEND", "thomas_solve", "projected_sor"]
