"""Kernel selection: compiled extension when importable, numpy otherwise.

Set ``FLAGCONTROL_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"

if os.environ.get("FLAGCONTROL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
else:
    _impl = _kernels_py

orthonormalize = _impl.orthonormalize
projector_features = _impl.projector_features
nearest = _impl.nearest
within = _impl.within
pairwise = _impl.pairwise
