"""Selects the computational core at import time.

The compiled Cython extension ``drivendimer._core`` is preferred; the
pure-NumPy module ``drivendimer._core_py`` implements the same interface
and is used when the extension is unavailable.  Override with the
environment variable ``DRIVENDIMER_BACKEND`` set to ``c`` or ``python``
("c" fails loudly if the extension cannot be imported).
"""

from __future__ import annotations

import os

_requested = os.environ.get("DRIVENDIMER_BACKEND", "auto").lower()

if _requested not in ("auto", "c", "python"):
    raise RuntimeError(
        f"DRIVENDIMER_BACKEND must be 'auto', 'c' or 'python', got {_requested!r}"
    )

if _requested == "python":
    from . import _core_py as kernels
else:
    try:
        from . import _core as kernels  # type: ignore[no-redef]
    except ImportError:
        if _requested == "c":
            raise
        from . import _core_py as kernels  # type: ignore[no-redef]

BACKEND = kernels.BACKEND_NAME


def get_kernels():
    """The active kernel module (compiled extension or NumPy fallback)."""
    return kernels
