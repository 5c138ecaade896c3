import numpy as np
import pytest

from translit import _pykernels, kernels
from translit.ctc import _extended
from translit.numeric import log_softmax, make_rng

try:
    from translit import _ckernels
except ImportError:  # pragma: no cover - extension not built
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled extension not built")


def test_backend_selected():
    assert kernels.BACKEND in ("cython", "python")
    if _ckernels is not None:
        assert kernels.BACKEND == "cython"


@needs_ext
def test_ctc_tables_agree():
    r = make_rng(0)
    for _ in range(200):
        T, V, L = int(r.integers(1, 12)), int(r.integers(1, 6)), int(r.integers(0, 5))
        lp = log_softmax(r.normal(size=(T, V + 1)))
        ext = _extended(r.integers(1, V + 1, size=L))
        a1, b1 = _pykernels.ctc_alpha_beta(lp, ext)
        a2, b2 = _ckernels.ctc_alpha_beta(lp, ext)
        np.testing.assert_allclose(a1, a2, atol=1e-12)
        np.testing.assert_allclose(b1, b2, atol=1e-12)
        assert (np.isneginf(a1) == np.isneginf(a2)).all()


@needs_ext
def test_levenshtein_agree():
    r = make_rng(1)
    for _ in range(300):
        a = "".join(r.choice(list("abcd"), size=int(r.integers(0, 9))))
        b = "".join(r.choice(list("abcd"), size=int(r.integers(0, 9))))
        assert _ckernels.levenshtein(a, b) == _pykernels.levenshtein(a, b)
    assert _ckernels.levenshtein([1, 2, 3], [1, 3]) == 1
    assert _ckernels.levenshtein("ʃɑ", "ʃɔ") == 1
