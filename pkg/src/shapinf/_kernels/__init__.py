"""Numeric kernels with a compiled fast path and a pure-Python fallback.

The backend is selected once at import time: the Cython extension when it
is installed, the fallback otherwise. Set SHAPINF_PURE_PYTHON=1 to force
the fallback (used by the benchmark and by tests). Both backends perform
identical floating-point operations in identical order and return
bit-identical results.
"""

from __future__ import annotations

import os

from . import _fallback

if os.environ.get("SHAPINF_PURE_PYTHON") == "1":
    _impl = _fallback
else:
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _fallback

masked_mean = _impl.masked_mean
shapley_dense = _impl.shapley_dense


def active_backend() -> str:
    """Name of the backend selected at import: 'compiled' or 'python'."""
    return "python" if _impl is _fallback else "compiled"
