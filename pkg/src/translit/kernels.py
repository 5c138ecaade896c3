"""Kernel backend selection.

The compiled extension is preferred; set ``TRANSLIT_PURE_PYTHON=1`` to force
the numpy/Python fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if not os.environ.get("TRANSLIT_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:  # extension not built
        pass

ctc_alpha_beta = _impl.ctc_alpha_beta
levenshtein = _impl.levenshtein
