"""Momentum SGD, the training loop and random hyperparameter search."""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .cells import GRU, LSTM
from .checkpoint import ModelCheckpoint
from .dataset import EOS_ID, TransliterationPair, build_vocab
from .ei import EpsilonModel
from .evaluation import cer, wer
from .numeric import ShapeError, make_rng
from .seq2seq import Seq2SeqModel

log = logging.getLogger(__name__)

FAMILIES = ("ei", "seq2seq")


class TrainingError(RuntimeError):
    """A trial diverged (non-finite loss, gradient or update)."""


@dataclass(frozen=True)
class Hyperparameters:
    family: str = "seq2seq"
    lr: float = 0.2
    momentum: float = 0.9
    batch: int = 32
    clip: float = 5.0
    hidden: int = 128
    layers: int = 1
    cell: str = GRU
    bidirectional: bool = False
    epsilons: int = 3
    seed: int = 0
    lr_decay: float = 1.0

    @classmethod
    def for_family(cls, family: str, **overrides) -> "Hyperparameters":
        if family == "ei":
            base = cls(family="ei", lr=0.01, momentum=0.9, batch=1, clip=9.0, cell=LSTM,
                       bidirectional=True, epsilons=3)
        elif family == "seq2seq":
            base = cls(family="seq2seq", lr=0.05, lr_decay=0.5)
        else:
            raise ValueError(f"unknown family {family!r}")
        return replace(base, **overrides)

    def validate(self) -> "Hyperparameters":
        problems = []
        if self.family not in FAMILIES:
            problems.append(f"family must be one of {FAMILIES}")
        if not self.lr > 0:
            problems.append("learning rate must be > 0")
        if not 0 <= self.momentum < 1:
            problems.append("momentum must lie in [0, 1)")
        if self.batch < 1:
            problems.append("batch size must be >= 1")
        if not self.clip > 0:
            problems.append("clip norm must be > 0")
        if self.hidden < 1 or self.layers < 1:
            problems.append("hidden units and layers must be >= 1")
        if self.cell not in (LSTM, GRU):
            problems.append("cell must be lstm or gru")
        if self.epsilons < 0:
            problems.append("epsilon count must be >= 0")
        if not 0 < self.lr_decay <= 1:
            problems.append("lr decay must lie in (0, 1]")
        if problems:
            raise ValueError("; ".join(problems))
        return self

    def model_config(self) -> dict:
        cfg = dict(cell=self.cell, layers=self.layers, hidden=self.hidden,
                   bidirectional=self.bidirectional)
        if self.family == "ei":
            cfg["epsilons"] = self.epsilons
        return cfg


@dataclass(frozen=True)
class Range:
    lo: float
    hi: float
    kind: str = "uniform"  # uniform | log | int

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty range [{self.lo}, {self.hi}]")

    def sample(self, rng: np.random.Generator):
        if self.kind == "log":
            return float(math.exp(rng.uniform(math.log(self.lo), math.log(self.hi))))
        if self.kind == "int":
            return int(rng.integers(int(self.lo), int(self.hi), endpoint=True))
        return float(rng.uniform(self.lo, self.hi))

    def contains(self, value) -> bool:
        return self.lo <= value <= self.hi


@dataclass(frozen=True)
class SearchSpace:
    family: str
    ranges: dict

    def sample(self, rng, base: Hyperparameters) -> Hyperparameters:
        return replace(base, **{name: r.sample(rng) for name, r in self.ranges.items()})


EI_SPACE = SearchSpace("ei", {
    "lr": Range(1e-5, 0.1, "log"),
    "momentum": Range(0.5, 0.99),
    "hidden": Range(100, 1000, "int"),
    "batch": Range(1, 1, "int"),
    "clip": Range(9.0, 9.0),
    "epsilons": Range(3, 3, "int"),
})

SEQ2SEQ_SPACE = SearchSpace("seq2seq", {
    "lr": Range(1e-5, 10.0, "log"),
    "momentum": Range(0.5, 0.99),
    "batch": Range(1, 50, "int"),
    "clip": Range(1.0, 10.0),
    "hidden": Range(50, 1000, "int"),
})

SPACES = {"ei": EI_SPACE, "seq2seq": SEQ2SEQ_SPACE}


@dataclass(frozen=True)
class Budget:
    max_steps: int = 200_000
    max_epochs: int = 50
    eval_every: int = 1000
    max_seconds: float | None = None


# ---------------------------------------------------------------- optimiser

def global_norm(grads) -> float:
    values = grads.values() if isinstance(grads, dict) else grads
    return float(math.sqrt(sum(float(np.vdot(g, g)) for g in values)))


def clip_gradients(grads, max_norm: float):
    """Rescale so the global L2 norm is at most ``max_norm``.

    Dicts are scaled in place; a list or single array gives new arrays.
    """
    if not max_norm > 0:
        raise ValueError("max_norm must be > 0")
    single = isinstance(grads, np.ndarray)
    norm = global_norm([grads] if single else grads)
    if norm <= max_norm:
        return grads
    scale = max_norm / norm
    if isinstance(grads, dict):
        for g in grads.values():
            g *= scale
        return grads
    if single:
        return grads * scale
    return [g * scale for g in grads]


def sgd_momentum_step(params, grads, velocity, lr: float, momentum: float):
    """Classical momentum: ``v = momentum * v - lr * g``; ``p = p + v``.

    Dicts are updated in place and returned; arrays give new arrays.
    """
    if isinstance(params, dict):
        for k, p in params.items():
            g, v = grads[k], velocity[k]
            if g.shape != p.shape or v.shape != p.shape:
                raise ShapeError(f"{k}: param {p.shape}, grad {g.shape}, velocity {v.shape}")
            v *= momentum
            v -= lr * g
            p += v
        return params, velocity
    p, g, v = (np.asarray(a, dtype=np.float64) for a in (params, grads, velocity))
    if not (p.shape == g.shape == v.shape):
        raise ShapeError(f"param {p.shape}, grad {g.shape}, velocity {v.shape}")
    v = momentum * v - lr * g
    return p + v, v


# ---------------------------------------------------------------- training

def make_model(hp: Hyperparameters, src_vocab, tgt_vocab, dtype="float64"):
    cfg = {**hp.model_config(), "dtype": dtype}
    cls = EpsilonModel if hp.family == "ei" else Seq2SeqModel
    return cls(cfg, src_vocab, tgt_vocab, seed=hp.seed)


def vocabularies(*splits):
    pairs = [p for s in splits if s for p in s]
    return build_vocab(p.source for p in pairs), build_vocab(p.target for p in pairs)


def evaluate_model(model, pairs: Sequence[TransliterationPair], beam_width: int = 1):
    """(CER, WER) of greedy/beam decoding on ``pairs``; OOV inputs count as empty output."""
    outs = model.transliterate([p.source for p in pairs], beam_width=beam_width)
    hyps = [o if isinstance(o, str) else "" for o in outs]
    refs = [p.target for p in pairs]
    return cer(refs, hyps), wer(refs, hyps)


@dataclass
class TrainResult:
    model: object
    checkpoint: ModelCheckpoint
    losses: list[float] = field(default_factory=list)
    evals: list[tuple[int, float, float]] = field(default_factory=list)
    lrs: list[float] = field(default_factory=list)  # learning rate after each eval
    skipped: int = 0
    best_step: int = 0


def train(family: str, splits, hp: Hyperparameters, budget: Budget = Budget(),
          vocabs=None, dtype="float64", target_loss: float | None = None,
          progress=None) -> TrainResult:
    """Train one network and keep the parameters with the best eval WER.

    ``splits`` is ``(train, eval[, test])``. Vocabularies default to the union
    of all splits. Training stops at whichever budget limit is hit first.
    Evaluation runs every ``budget.eval_every`` steps and at the end of each
    epoch and when training stops; ties on WER go to lower CER, then the earlier step.
    With ``hp.lr_decay < 1`` the learning rate is multiplied by it after
    every evaluation that does not improve on the best. With ``target_loss`` set, training also stops once an epoch's mean loss
    falls below it.
    """
    hp = replace(hp, family=family).validate()
    train_pairs, eval_pairs = splits[0], splits[1]
    src_vocab, tgt_vocab = vocabs or vocabularies(*splits)
    model = make_model(hp, src_vocab, tgt_vocab, dtype)
    srcs = [src_vocab.encode(p.source) for p in train_pairs]
    if family == "seq2seq":
        tgts = [tgt_vocab.encode(p.target) + [EOS_ID] for p in train_pairs]
    else:
        tgts = [tgt_vocab.encode(p.target) for p in train_pairs]
    rng = make_rng(hp.seed)
    velocity = model.zero_grads()
    result = TrainResult(model, None)
    best = None  # (wer, cer, step, params)
    step = 0
    last_eval = -1
    lr = hp.lr

    def run_eval():
        nonlocal best, last_eval, lr
        c, w = evaluate_model(model, eval_pairs)
        result.evals.append((step, c, w))
        last_eval = step
        if best is None or (w, c) < (best[0], best[1]):
            best = (w, c, step, model.copy_params())
        else:
            lr *= hp.lr_decay
        result.lrs.append(lr)
        if progress:
            progress(f"step {step} eval CER {c:.2f} WER {w:.2f} lr {lr:.4g}")

    done = False
    deadline = None if budget.max_seconds is None else time.monotonic() + budget.max_seconds
    for epoch in range(budget.max_epochs):
        order = rng.permutation(len(srcs))
        epoch_losses = []
        for start in range(0, len(order), hp.batch):
            idx = order[start:start + hp.batch]
            loss, grads, info = model.loss_and_grads([srcs[i] for i in idx], [tgts[i] for i in idx])
            result.skipped += info.get("skipped", 0)
            if not math.isfinite(loss) or not all(np.isfinite(g).all() for g in grads.values()):
                raise TrainingError(f"non-finite loss at step {step} (epoch {epoch})")
            clip_gradients(grads, hp.clip)
            sgd_momentum_step(model.params, grads, velocity, lr, hp.momentum)
            if not math.isfinite(global_norm(velocity)):
                raise TrainingError(f"parameters diverged at step {step} (epoch {epoch})")
            step += 1
            result.losses.append(loss)
            epoch_losses.append(loss)
            if step % budget.eval_every == 0:
                run_eval()
            if step >= budget.max_steps or (deadline and time.monotonic() >= deadline):
                done = True
                break
        if last_eval != step:
            run_eval()
        if progress:
            progress(f"epoch {epoch} mean loss {np.mean(epoch_losses):.4f}")
        if target_loss is not None and np.mean(epoch_losses) < target_loss:
            done = True
        if done:
            break
    if result.skipped:
        log.warning("skipped %d infeasible CTC targets", result.skipped)
    w, c, best_step, params = best
    model.load_params(params)
    result.best_step = best_step
    meta = {"steps": step, "best_step": best_step, "eval_cer": c, "eval_wer": w,
            "seed": hp.seed, "skipped": result.skipped}
    if len(splits) > 2 and splits[2]:
        tc, tw = evaluate_model(model, splits[2])
        meta.update(test_cer=tc, test_wer=tw)
    result.checkpoint = ModelCheckpoint.from_model(model, asdict(hp), meta)
    return result


# ---------------------------------------------------------------- search

TABLE_COLUMNS = ("trial", "lr", "momentum", "batch", "clip", "hidden", "layers", "cell",
                 "bidirectional", "epsilons", "lr_decay", "seed", "status", "eval_cer",
                 "eval_wer", "test_cer", "test_wer")


@dataclass
class SearchResult:
    checkpoint: ModelCheckpoint | None
    trials: list[dict]
    best_trial: int | None

    def table_tsv(self) -> str:
        lines = ["\t".join(TABLE_COLUMNS)]
        for row in self.trials:
            lines.append("\t".join(_fmt(row.get(c, "")) for c in TABLE_COLUMNS))
        return "\n".join(lines) + "\n"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def sample_trials(family: str, space: SearchSpace, trials: int, seed: int,
                  base: Hyperparameters | None = None) -> list[Hyperparameters]:
    rng = make_rng(seed)
    base = base or Hyperparameters.for_family(family)
    out = []
    for _ in range(trials):
        hp = space.sample(rng, base)
        out.append(replace(hp, seed=int(rng.integers(2**31))))
    return out


def _run_trial(args):
    trial, family, splits, hp, budget, vocabs, dtype = args
    row = {"trial": trial, **{k: v for k, v in asdict(hp).items() if k != "family"}}
    try:
        res = train(family, splits[:2], hp, budget, vocabs=vocabs, dtype=dtype)
    except TrainingError as exc:
        row.update(status=f"failed: {exc}")
        return row, None
    row.update(status="ok", eval_cer=res.checkpoint.metadata["eval_cer"],
               eval_wer=res.checkpoint.metadata["eval_wer"])
    return row, res.checkpoint.to_bytes()


def random_search(family: str, space: SearchSpace, trials: int, seed: int, splits,
                  budget: Budget = Budget(), workers: int = 1, base=None,
                  dtype="float64") -> SearchResult:
    """Sample ``trials`` configurations, train each, keep the best on eval WER.

    Learning rates are drawn log-uniformly, integer ranges uniformly over the
    integers, everything else uniformly. Only the winner is scored on test.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    vocabs = vocabularies(*splits)
    configs = sample_trials(family, space, trials, seed, base)
    jobs = [(i, family, splits, hp, budget, vocabs, dtype) for i, hp in enumerate(configs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_trial, jobs))
    else:
        outcomes = [_run_trial(j) for j in jobs]
    rows = [r for r, _ in outcomes]
    ok = [(r["eval_wer"], r["eval_cer"], r["trial"]) for r in rows if r["status"] == "ok"]
    if not ok:
        return SearchResult(None, rows, None)
    _, _, winner = min(ok)
    ckpt = ModelCheckpoint.from_bytes(outcomes[winner][1])
    if len(splits) > 2 and splits[2]:
        tc, tw = evaluate_model(ckpt.to_model(), splits[2])
        rows[winner].update(test_cer=tc, test_wer=tw)
        ckpt.metadata.update(test_cer=tc, test_wer=tw)
    ckpt.metadata["trial"] = winner
    return SearchResult(ckpt, rows, winner)
