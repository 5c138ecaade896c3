"""Character/word error rates and the worst-error report."""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Sequence

from . import kernels
from .dataset import OutOfVocabularyError, TransliterationPair


def edit_distance(a, b) -> int:
    """Levenshtein distance with unit costs."""
    return kernels.levenshtein(a, b)


def _check_lengths(refs, hyps):
    if len(refs) != len(hyps):
        raise ValueError(f"{len(refs)} references but {len(hyps)} hypotheses")


def cer(refs: Sequence[str], hyps: Sequence[str], pooled: bool = True) -> float:
    """Character error rate in percent.

    Pooled (default): total edits over total reference length. Otherwise the
    mean of per-token rates.
    """
    _check_lengths(refs, hyps)
    if not refs:
        raise ValueError("no references")
    dists = [edit_distance(r, h) for r, h in zip(refs, hyps)]
    if pooled:
        total = sum(len(r) for r in refs)
        if total == 0:
            raise ValueError("references are empty")
        return 100.0 * sum(dists) / total
    if any(len(r) == 0 for r in refs):
        raise ValueError("empty reference in per-token CER")
    return 100.0 * sum(d / len(r) for d, r in zip(dists, refs)) / len(refs)


def wer(refs: Sequence[str], hyps: Sequence[str]) -> float:
    """Percentage of tokens not reproduced exactly (one word per entry)."""
    _check_lengths(refs, hyps)
    if not refs:
        raise ValueError("no references")
    return 100.0 * sum(r != h for r, h in zip(refs, hyps)) / len(refs)


@dataclass(frozen=True)
class ErrorExample:
    source: str
    reference: str
    hypothesis: str
    distance: int


@dataclass
class EvalReport:
    cer: float
    wer: float
    pairs: int
    examples: list[ErrorExample] = field(default_factory=list)
    hypotheses: list[str] = field(default_factory=list)
    oov_count: int = 0

    def render_text(self) -> str:
        out = io.StringIO()
        out.write(f"CER {self.cer:.2f} WER {self.wer:.2f}\n")
        out.write(f"pairs {self.pairs} oov {self.oov_count}\n")
        if self.examples:
            out.write("input\treference\thypothesis\tdistance\n")
            for e in self.examples:
                out.write(f"{e.source}\t{e.reference}\t{e.hypothesis}\t{e.distance}\n")
        return out.getvalue()

    def to_tsv(self) -> str:
        rows = ["input\treference\thypothesis\tdistance"]
        rows += [f"{e.source}\t{e.reference}\t{e.hypothesis}\t{e.distance}" for e in self.examples]
        return "\n".join(rows) + "\n"


def score(pairs: Sequence[TransliterationPair], hyps: Sequence[str], top_n: int = 10,
          pooled: bool = True) -> EvalReport:
    refs = [p.target for p in pairs]
    errors = []
    for i, (p, h) in enumerate(zip(pairs, hyps)):
        if h != p.target:
            errors.append((edit_distance(p.target, h), i, p, h))
    errors.sort(key=lambda e: (-e[0], e[1]))
    return EvalReport(
        cer=cer(refs, hyps, pooled),
        wer=wer(refs, hyps),
        pairs=len(pairs),
        examples=[ErrorExample(p.source, p.target, h, d) for d, _, p, h in errors[:top_n]],
        hypotheses=list(hyps),
    )


def error_report(model, test_pairs: Sequence[TransliterationPair], top_n: int = 10,
                 beam_width: int = 1, pooled: bool = True) -> EvalReport:
    """Decode every test source and collect metrics plus the worst errors.

    Sources with out-of-vocabulary codepoints decode to the empty string and
    are counted in ``oov_count``.
    """
    if not test_pairs:
        raise ValueError("empty test set")
    outs = model.transliterate([p.source for p in test_pairs], beam_width=beam_width)
    oov = sum(isinstance(o, OutOfVocabularyError) for o in outs)
    hyps = ["" if isinstance(o, OutOfVocabularyError) else o for o in outs]
    report = score(test_pairs, hyps, top_n=top_n, pooled=pooled)
    report.oov_count = oov
    return report
