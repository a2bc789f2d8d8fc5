"""Pick the kernel implementation at import time.

The compiled extension is used when it is importable. Set ``DQLAP_BACKEND``
to ``python`` to force the numpy fallback, or to ``cython`` to make a
missing extension an error.
"""

import os

from . import _kernels_py

_choice = os.environ.get("DQLAP_BACKEND", "auto").lower()
if _choice not in ("auto", "python", "cython"):
    raise ImportError(f"DQLAP_BACKEND must be auto, python or cython, got {_choice!r}")

kernels = _kernels_py
name = "python"
if _choice != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:
        if _choice == "cython":
            raise
    else:
        kernels = _compiled
        name = "cython"


def get(backend=None):
    """Return the kernel module for ``backend`` (None means the import-time pick)."""
    if backend is None:
        return kernels
    if backend == "python":
        return _kernels_py
    if backend == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {backend!r}")
