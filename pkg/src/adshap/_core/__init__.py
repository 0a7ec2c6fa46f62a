"""Hot kernels, compiled when available.

The Cython module ``_kernels`` is used if it was built at install time;
otherwise the NumPy versions in ``_fallback`` are bound instead. Set
``ADSHAP_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _fallback

BACKEND = "numpy"
if not os.environ.get("ADSHAP_PURE_PYTHON"):
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
else:
    _impl = _fallback

knn_query = _impl.knn_query
iforest_path_lengths = _impl.iforest_path_lengths

__all__ = ["BACKEND", "knn_query", "iforest_path_lengths"]
