"""Codepoint-level parallel corpora: loading, normalisation, vocabularies, splits."""
from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .numeric import make_rng

EPSILON_ID, PAD_ID, GO_ID, EOS_ID = 0, 1, 2, 3
RESERVED = ("<eps>", "<pad>", "<go>", "<eos>")
NUM_RESERVED = len(RESERVED)


class DataError(ValueError):
    """A corpus file is malformed."""


class ParseError(DataError):
    def __init__(self, path, lineno, message):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = path
        self.lineno = lineno


class OutOfVocabularyError(KeyError):
    def __init__(self, symbol):
        super().__init__(symbol)
        self.symbol = symbol

    def __str__(self):
        return f"out-of-vocabulary codepoint {self.symbol!r} (U+{ord(self.symbol):04X})"


@dataclass(frozen=True)
class TransliterationPair:
    source: str
    target: str


class CodepointVocabulary:
    """Bijective codepoint/id table; ids 0-3 are epsilon, pad, go and eos."""

    def __init__(self, symbols: Iterable[str] = ()):
        self.symbols: list[str] = list(RESERVED)
        self._ids: dict[str, int] = {}
        for s in symbols:
            self.add(s)

    def add(self, symbol: str) -> int:
        if len(symbol) != 1:
            raise ValueError(f"vocabulary entries are single codepoints, got {symbol!r}")
        if symbol not in self._ids:
            self._ids[symbol] = len(self.symbols)
            self.symbols.append(symbol)
        return self._ids[symbol]

    def __len__(self):
        return len(self.symbols)

    @property
    def content_size(self) -> int:
        return len(self.symbols) - NUM_RESERVED

    def __contains__(self, symbol):
        return symbol in self._ids

    def id(self, symbol: str) -> int:
        try:
            return self._ids[symbol]
        except KeyError:
            raise OutOfVocabularyError(symbol) from None

    def symbol(self, idx: int) -> str:
        if idx < NUM_RESERVED or idx >= len(self.symbols):
            raise IndexError(f"id {idx} is not a content symbol")
        return self.symbols[idx]

    def encode(self, text: str) -> list[int]:
        return [self.id(c) for c in text]

    def decode(self, ids: Sequence[int]) -> str:
        return "".join(self.symbol(int(i)) for i in ids)

    def content(self) -> list[str]:
        return self.symbols[NUM_RESERVED:]

    def __eq__(self, other):
        return isinstance(other, CodepointVocabulary) and self.symbols == other.symbols

    def __repr__(self):
        return f"CodepointVocabulary({''.join(self.content())!r})"


@dataclass(frozen=True)
class DatasetStats:
    size: int
    avg_input_length: float
    avg_output_length: float
    source_vocab_size: int
    target_vocab_size: int

    def row(self, name: str = "") -> str:
        return (f"{name}\t{self.size}\t{self.avg_input_length:.2f}\t"
                f"{self.avg_output_length:.2f}\t{self.source_vocab_size}\t"
                f"{self.target_vocab_size}").lstrip("\t")


def load_pairs(path) -> list[TransliterationPair]:
    """Read ``source<TAB>target`` lines from a UTF-8 file, in file order."""
    path = Path(path)
    raw = path.read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        lineno = raw[:exc.start].count(b"\n") + 1
        raise DataError(f"{path}:{lineno}: invalid UTF-8 ({exc.reason})") from None
    pairs = []
    for lineno, line in enumerate(text.split("\n"), 1):
        line = line.rstrip("\r")
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise ParseError(path, lineno, f"expected exactly one tab, found {len(fields) - 1}")
        src, tgt = fields
        if not src or not tgt:
            raise ParseError(path, lineno, "empty source or target field")
        pairs.append(TransliterationPair(src, tgt))
    return pairs


def write_pairs(path, pairs: Iterable[TransliterationPair]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in pairs:
            fh.write(f"{p.source}\t{p.target}\n")


def _normalize_once(token: str) -> str:
    decomposed = unicodedata.normalize("NFD", token)
    stripped = "".join(c for c in decomposed if not unicodedata.combining(c))
    return unicodedata.normalize("NFC", stripped.lower())


def normalize_english(token: str) -> str:
    """Lowercase and strip diacritics (``è`` -> ``e``).

    Letters with no canonical decomposition, such as ``ß``, ``ø`` and ``ł``,
    pass through unchanged. Iterated to a fixed point so the result is stable
    under re-application even for exotic case mappings.
    """
    for _ in range(8):
        nxt = _normalize_once(token)
        if nxt == token:
            break
        token = nxt
    return token


def normalize_pairs(pairs, side: str = "none") -> list[TransliterationPair]:
    if side not in ("none", "source", "target"):
        raise ValueError(f"normalize side must be none, source or target, not {side!r}")
    if side == "none":
        return list(pairs)
    out = []
    for p in pairs:
        src = normalize_english(p.source) if side == "source" else p.source
        tgt = normalize_english(p.target) if side == "target" else p.target
        out.append(TransliterationPair(src, tgt))
    return out


def build_vocab(sequences: Iterable[str]) -> CodepointVocabulary:
    """Vocabulary of distinct codepoints in first-appearance order."""
    vocab = CodepointVocabulary()
    for seq in sequences:
        for c in seq:
            vocab.add(c)
    return vocab


def split(pairs: Sequence, seed: int):
    """Shuffle, then take 10% test and 10% of the rest for evaluation (floors)."""
    n = len(pairs)
    if n < 10:
        raise ValueError(f"need at least 10 pairs to split, got {n}")
    order = make_rng(seed).permutation(n)
    shuffled = [pairs[i] for i in order]
    n_test = n // 10
    n_eval = (n - n_test) // 10
    test = shuffled[:n_test]
    evaluation = shuffled[n_test:n_test + n_eval]
    train = shuffled[n_test + n_eval:]
    return train, evaluation, test


def stats(pairs: Sequence[TransliterationPair]) -> DatasetStats:
    if not pairs:
        raise ValueError("stats of an empty corpus")
    src_len = np.array([len(p.source) for p in pairs], dtype=np.float64)
    tgt_len = np.array([len(p.target) for p in pairs], dtype=np.float64)
    return DatasetStats(
        size=len(pairs),
        avg_input_length=float(src_len.mean()),
        avg_output_length=float(tgt_len.mean()),
        source_vocab_size=build_vocab(p.source for p in pairs).content_size,
        target_vocab_size=build_vocab(p.target for p in pairs).content_size,
    )
