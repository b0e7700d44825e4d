"""Kernel backend selection.

The compiled extension is preferred when it imports cleanly; set
DIDAN_PURE_PYTHON=1 to force the numpy fallback. Arrays handed to the
compiled kernels must be C-contiguous, which the autodiff layer
guarantees.
"""

import os

from . import _pure
from ._pure import COSINE_EPS

if os.environ.get("DIDAN_PURE_PYTHON") == "1":
    _impl = _pure
    BACKEND = "python"
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _pure
        BACKEND = "python"

softmax_rows_fwd = _impl.softmax_rows_fwd
softmax_rows_bwd = _impl.softmax_rows_bwd
cosine_matrix_fwd = _impl.cosine_matrix_fwd
cosine_matrix_bwd = _impl.cosine_matrix_bwd

__all__ = [
    "BACKEND",
    "COSINE_EPS",
    "softmax_rows_fwd",
    "softmax_rows_bwd",
    "cosine_matrix_fwd",
    "cosine_matrix_bwd",
]
