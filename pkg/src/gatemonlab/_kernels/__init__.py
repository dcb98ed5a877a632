"""Hot loops, compiled when the Cython extension is built.

Set ``GATEMONLAB_PURE_PYTHON=1`` to force the pure-Python versions.
"""
import os

from . import _fallback

try:
    if os.environ.get("GATEMONLAB_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python kernels requested")
    from . import _core as _impl
    BACKEND = "cython"
except ImportError:
    _impl = _fallback
    BACKEND = "python"

integrate_bloch = _impl.integrate_bloch
cosine_field = _impl.cosine_field

__all__ = ["BACKEND", "integrate_bloch", "cosine_field"]
