"""Kernel backend selection.

``PTIA_BACKEND`` chooses the implementation: ``auto`` (default) uses the
compiled extension when it imports and falls back to pure Python otherwise;
``cython`` requires the extension; ``python`` forces the fallback.
"""

import os

from . import _kernels_py

_choice = os.environ.get("PTIA_BACKEND", "auto").strip().lower()
if _choice not in ("auto", "cython", "python"):
    raise ImportError(f"PTIA_BACKEND must be auto, cython or python, got {_choice!r}")

if _choice == "python":
    kernels = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        if _choice == "cython":
            raise
        kernels = _kernels_py
        BACKEND = "python"
    else:
        BACKEND = "cython"

solve_loop = kernels.solve_loop
loop_balance = kernels.loop_balance
