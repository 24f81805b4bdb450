"""Select the compiled kernels when available, else the pure-Python ones.

Set ``GPBUNDLE_PURE_PYTHON=1`` to force the fallback.
"""
import os

if os.environ.get("GPBUNDLE_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as kernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels
        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        from . import _kernels_py as kernels
        BACKEND = "python"

__all__ = ["kernels", "BACKEND"]
