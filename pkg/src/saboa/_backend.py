"""Pick the kernel implementation once, at import.

Set ``SABOA_PURE_PYTHON=1`` to force the numpy fallback even when the
compiled extension is available.
"""

import os

if os.environ.get("SABOA_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as kernels

    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels

        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as kernels

        BACKEND = "python"

__all__ = ["kernels", "BACKEND"]
