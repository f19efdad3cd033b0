"""Kernel backend selection.

The compiled extension is used when importable; set
``INEXACT_DR_PURE_PYTHON=1`` before import to force the numpy fallback.
"""

import os

from . import _kernels_py

if os.environ.get("INEXACT_DR_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

soft_threshold = _impl.soft_threshold
clip_box = _impl.clip_box
l1_gap = _impl.l1_gap
box_gap = _impl.box_gap
l1_selection = _impl.l1_selection
box_selection = _impl.box_selection
lasso_gap = _impl.lasso_gap
lasso_cd = _impl.lasso_cd

__all__ = ["BACKEND", "soft_threshold", "clip_box", "l1_gap", "box_gap",
           "l1_selection", "box_selection", "lasso_gap", "lasso_cd"]
