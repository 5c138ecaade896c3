"""Full random hyperparameter search for one family (non-gating, multi-day).

Samples ``--trials`` configurations from the family's search space, trains
each on the train split with early selection on the eval split, and scores
only the winner on test. Example, 1000 EN-IPA seq2seq networks on 8 cores::

    python scripts/full_search.py data/en-ipa.tsv --family seq2seq \\
        --trials 1000 --workers 8 --out runs/en-ipa-search

Writes ``<out>.ckpt`` (winner) and ``<out>.trials.tsv`` (one row per trial,
so the best values can be checked against the interior of each range).
"""
import argparse
import sys

from translit.cli import main


def run(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("data")
    ap.add_argument("--family", choices=("ei", "seq2seq"), required=True)
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-epochs", type=int, default=50)
    ap.add_argument("--eval-every", type=int, default=1000)
    ap.add_argument("--dtype", choices=("float64", "float32"), default="float32")
    ap.add_argument("--normalize-side", choices=("none", "source", "target"), default="none")
    ap.add_argument("--out", required=True, help="output path prefix")
    a = ap.parse_args(argv)
    return main(["search", a.data, "--family", a.family, "--trials", str(a.trials),
                 "--workers", str(a.workers), "--seed", str(a.seed),
                 "--max-epochs", str(a.max_epochs), "--eval-every", str(a.eval_every),
                 "--dtype", a.dtype, "--normalize-side", a.normalize_side,
                 "--checkpoint", f"{a.out}.ckpt", "--table", f"{a.out}.trials.tsv", "-v"])


if __name__ == "__main__":
    sys.exit(run())
