"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Prints one row per kernel: mean seconds per call for each backend and the
speedup. Both backends are checked to agree before timing.
"""
import argparse
import timeit

import numpy as np

from translit import _pykernels
from translit.ctc import _extended
from translit.numeric import log_softmax, make_rng

try:
    from translit import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def cases(rng):
    lp = log_softmax(rng.normal(size=(60, 40)))
    ext = _extended([int(x) for x in rng.integers(1, 40, size=18)])
    a = "".join(rng.choice(list("abcdefghij"), size=20))
    b = "".join(rng.choice(list("abcdefghij"), size=22))
    return {
        "ctc_alpha_beta T=60 V=40 L=18": ("ctc_alpha_beta", (lp, ext)),
        "levenshtein 20x22": ("levenshtein", (a, b)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled kernels unavailable; build with pip install -e . --no-build-isolation")
        return
    print(f"{'kernel':32s} {'cython s':>10s} {'python s':>10s} {'speedup':>8s}")
    for label, (name, argv) in cases(make_rng(0)).items():
        fc, fp = getattr(_ckernels, name), getattr(_pykernels, name)
        rc, rp = fc(*argv), fp(*argv)
        if isinstance(rc, tuple):
            assert all(np.allclose(x, y, equal_nan=True) for x, y in zip(rc, rp))
        else:
            assert rc == rp
        tc = min(timeit.repeat(lambda: fc(*argv), number=args.repeat, repeat=3)) / args.repeat
        tp = min(timeit.repeat(lambda: fp(*argv), number=args.repeat, repeat=3)) / args.repeat
        print(f"{label:32s} {tc:10.2e} {tp:10.2e} {tp / tc:8.1f}")


if __name__ == "__main__":
    main()
