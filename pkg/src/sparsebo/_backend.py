"""Pick the compiled core when it is importable, else the numpy fallback.

Set ``SPARSEBO_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _core_py

if os.environ.get("SPARSEBO_PURE_PYTHON", "") not in ("", "0"):
    core = _core_py
    BACKEND = "python"
else:
    try:
        from . import _core as core
    except ImportError:
        core = _core_py
        BACKEND = "python"
    else:
        BACKEND = "cython"

__all__ = ["core", "BACKEND"]
