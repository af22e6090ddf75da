"""Hot loops of the gain quadrature.

The compiled extension is used when it was built; otherwise the numpy
fallback is selected.  Set COAGKIN_PURE_PYTHON=1 to force the fallback.
"""
import os

from . import _fallback

try:
    if os.environ.get("COAGKIN_PURE_PYTHON"):
        raise ImportError("fallback forced by environment")
    from . import _kernels as _impl
    BACKEND = "cython"
except ImportError:
    _impl = _fallback
    BACKEND = "numpy"

pair_apply = _impl.pair_apply
pair_jacobian = _impl.pair_jacobian

__all__ = ["BACKEND", "pair_apply", "pair_jacobian"]
