"""Select the compiled kernel module, falling back to pure Python.

Set ``SETCLASH_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("SETCLASH_PURE_PYTHON", "") not in ("", "0"):
    kernels = _kernels_py
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]
    except ImportError:
        kernels = _kernels_py

BACKEND = "python" if kernels is _kernels_py else "compiled"
