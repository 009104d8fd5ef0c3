"""Kernel backend selection.

The compiled Cython extension is used when importable; otherwise the
pure-Python reference implementation takes over. Set MITODET_PURE_PYTHON=1
to force the fallback (used by tests and benchmarks).
"""

import os

from . import pyfallback

if os.environ.get("MITODET_PURE_PYTHON"):
    _impl = pyfallback
    BACKEND = "python"
else:
    try:
        from . import _ccl as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = pyfallback
        BACKEND = "python"

label_components = _impl.label_components
fill_holes = _impl.fill_holes

__all__ = ["label_components", "fill_holes", "BACKEND", "pyfallback"]
