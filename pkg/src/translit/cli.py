"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 training failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .checkpoint import CheckpointError, ModelCheckpoint
from .dataset import (DataError, OutOfVocabularyError, load_pairs, normalize_pairs, split,
                      stats, write_pairs)
from .evaluation import error_report
from .training import (SPACES, Budget, Hyperparameters, TrainingError, random_search, train)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_TRAIN = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read_corpus(args):
    path = Path(args.data)
    if not path.is_file():
        raise DataError(f"{path}: no such file")
    return normalize_pairs(load_pairs(path), args.normalize_side)


def _hparams(args) -> Hyperparameters:
    overrides = {k: getattr(args, k) for k in
                 ("cell", "layers", "hidden", "epsilons", "lr", "momentum", "batch", "clip",
                  "seed", "lr_decay")
                 if getattr(args, k, None) is not None}
    if getattr(args, "bidi", None) is not None:
        overrides["bidirectional"] = args.bidi
    try:
        return Hyperparameters.for_family(args.family, **overrides).validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _budget(args) -> Budget:
    b = Budget(args.max_steps, args.max_epochs, args.eval_every, args.max_seconds)
    if min(b.max_steps, b.max_epochs, b.eval_every) < 1:
        raise UsageError("--max-steps, --max-epochs and --eval-every must be >= 1")
    if b.max_seconds is not None and not b.max_seconds > 0:
        raise UsageError("--max-seconds must be > 0")
    return b


def _print_metrics(meta, out):
    print(f"CER {meta['test_cer']:.2f} WER {meta['test_wer']:.2f}", file=out)


def cmd_dataset_stats(args, out):
    s = stats(_read_corpus(args))
    print("size\tavg_input\tavg_output\tsource_vocab\ttarget_vocab", file=out)
    print(s.row(), file=out)
    return EXIT_OK


def cmd_split(args, out):
    train_p, eval_p, test_p = split(_read_corpus(args), args.seed)
    d = Path(args.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    for name, part in (("train", train_p), ("eval", eval_p), ("test", test_p)):
        write_pairs(d / f"{name}.tsv", part)
        print(f"{name}\t{len(part)}", file=out)
    return EXIT_OK


def cmd_train(args, out):
    hp = _hparams(args)
    budget = _budget(args)
    splits = split(_read_corpus(args), hp.seed)
    progress = (lambda msg: print(msg, file=sys.stderr)) if args.verbose else None
    res = train(args.family, splits, hp, budget, dtype=args.dtype, progress=progress)
    res.checkpoint.save(args.checkpoint)
    print(f"checkpoint {args.checkpoint}", file=out)
    _print_metrics(res.checkpoint.metadata, out)
    return EXIT_OK


def cmd_search(args, out):
    hp = _hparams(args)
    budget = _budget(args)
    if args.trials < 1 or args.workers < 1:
        raise UsageError("--trials and --workers must be >= 1")
    splits = split(_read_corpus(args), hp.seed)
    space = SPACES[args.family]
    res = random_search(args.family, space, args.trials, hp.seed, splits, budget,
                        workers=args.workers, base=hp, dtype=args.dtype)
    table = Path(args.table) if args.table else Path(args.checkpoint).with_suffix(".trials.tsv")
    table.write_text(res.table_tsv(), encoding="utf-8")
    print(f"trials {table}", file=out)
    if res.checkpoint is None:
        print("all trials failed", file=sys.stderr)
        return EXIT_TRAIN
    res.checkpoint.save(args.checkpoint)
    print(f"checkpoint {args.checkpoint}", file=out)
    _print_metrics(res.checkpoint.metadata, out)
    return EXIT_OK


def _load_checkpoint(path):
    if not Path(path).is_file():
        raise DataError(f"{path}: no such file")
    try:
        return ModelCheckpoint.load(path)
    except CheckpointError as exc:
        raise DataError(f"{path}: {exc}") from None


def cmd_evaluate(args, out):
    model = _load_checkpoint(args.checkpoint).to_model()
    pairs = _read_corpus(args)
    report = error_report(model, pairs, top_n=args.top, beam_width=args.beam,
                          pooled=not args.per_token_cer)
    out.write(report.render_text())
    if args.report_tsv:
        Path(args.report_tsv).write_text(report.to_tsv(), encoding="utf-8")
    return EXIT_OK


def cmd_transliterate(args, out):
    model = _load_checkpoint(args.checkpoint).to_model()
    tokens = [line.rstrip("\r\n") for line in args.input]
    results = model.transliterate(tokens, beam_width=args.beam) if tokens else []
    oov = 0
    for tok, res in zip(tokens, results):
        if isinstance(res, OutOfVocabularyError):
            oov += 1
            res = f"<ERROR:oov:{res.symbol}>"
        print(f"{tok}\t{res}", file=out)
    if oov:
        print(f"oov {oov}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="translit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def data_args(sp):
        sp.add_argument("data", help="TSV file of source<TAB>target lines")
        sp.add_argument("--normalize-side", choices=("none", "source", "target"), default="none")

    s = sub.add_parser("dataset-stats", help="corpus size, mean lengths, vocabulary sizes")
    data_args(s)
    s.set_defaults(func=cmd_dataset_stats)

    s = sub.add_parser("split", help="write seeded train/eval/test splits")
    data_args(s)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_split)

    def model_args(sp):
        data_args(sp)
        sp.add_argument("--family", choices=("ei", "seq2seq"), required=True)
        sp.add_argument("--cell", choices=("lstm", "gru"))
        sp.add_argument("--layers", type=int)
        sp.add_argument("--hidden", type=int)
        sp.add_argument("--bidi", action=argparse.BooleanOptionalAction, default=None)
        sp.add_argument("--epsilons", type=int)
        sp.add_argument("--lr", type=float)
        sp.add_argument("--momentum", type=float)
        sp.add_argument("--batch", type=int)
        sp.add_argument("--clip", type=float)
        sp.add_argument("--lr-decay", type=float,
                        help="multiply lr by this after each eval without improvement")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--checkpoint", required=True, help="output checkpoint path")
        sp.add_argument("--max-steps", type=int, default=Budget.max_steps)
        sp.add_argument("--max-epochs", type=int, default=Budget.max_epochs)
        sp.add_argument("--eval-every", type=int, default=Budget.eval_every)
        sp.add_argument("--max-seconds", type=float, help="wall-clock limit per training run")
        sp.add_argument("--dtype", choices=("float64", "float32"), default="float64")
        sp.add_argument("-v", "--verbose", action="store_true")

    s = sub.add_parser("train", help="train one network")
    model_args(s)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("search", help="random hyperparameter search")
    model_args(s)
    s.add_argument("--trials", type=int, default=10)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--table", help="trial table TSV (default: next to the checkpoint)")
    s.set_defaults(func=cmd_search)

    s = sub.add_parser("evaluate", help="CER/WER and worst errors on a TSV")
    data_args(s)
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--top", type=int, default=10)
    s.add_argument("--beam", type=int, default=1)
    s.add_argument("--per-token-cer", action="store_true")
    s.add_argument("--report-tsv")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("transliterate", help="decode one token per stdin line")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--beam", type=int, default=1)
    s.add_argument("input", nargs="?", type=argparse.FileType("r", encoding="utf-8"),
                   default=sys.stdin)
    s.set_defaults(func=cmd_transliterate)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except UsageError as exc:
        print(f"translit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError, UnicodeError) as exc:
        print(f"translit: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        # corpus too small to split, etc.
        print(f"translit: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TrainingError as exc:
        print(f"translit: training failed: {exc}", file=sys.stderr)
        return EXIT_TRAIN


if __name__ == "__main__":
    sys.exit(main())
