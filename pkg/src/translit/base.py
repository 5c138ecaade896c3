"""Shared model plumbing: parameter dicts, padding, string-level inference."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .dataset import EOS_ID, NUM_RESERVED, PAD_ID, CodepointVocabulary, OutOfVocabularyError

# output column j <-> vocabulary id j + OUTPUT_OFFSET; column 0 is blank (EI) or eos (seq2seq)
OUTPUT_OFFSET = NUM_RESERVED - 1
assert OUTPUT_OFFSET == EOS_ID


def pad_batch(seqs: Sequence[Sequence[int]], pad: int = PAD_ID, dtype=np.float64):
    """Time-major ``(T, B)`` id matrix and float mask for ragged sequences."""
    T = max(len(s) for s in seqs)
    ids = np.full((T, len(seqs)), pad, dtype=np.int64)
    mask = np.zeros((T, len(seqs)), dtype=dtype)
    for b, s in enumerate(seqs):
        ids[:len(s), b] = s
        mask[:len(s), b] = 1.0
    return ids, mask


class Model:
    """Base for both families; subclasses define the forward/backward pass."""

    family = ""

    def __init__(self, config: dict, src_vocab: CodepointVocabulary,
                 tgt_vocab: CodepointVocabulary, params: dict[str, np.ndarray]):
        self.config = dict(config)
        self.src_vocab = src_vocab
        self.tgt_vocab = tgt_vocab
        self.params = params
        self.dtype = np.dtype(self.config.get("dtype", "float64"))

    @property
    def num_outputs(self) -> int:
        return self.tgt_vocab.content_size + 1

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.params.items()}

    def num_parameters(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def copy_params(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params.items()}

    def load_params(self, values: dict[str, np.ndarray]) -> None:
        for k, v in values.items():
            self.params[k][...] = v

    def loss_and_grads(self, sources, targets):
        raise NotImplementedError

    def decode_ids(self, sources, beam_width: int = 1) -> list[list[int]]:
        raise NotImplementedError

    def transliterate(self, tokens: Sequence[str], beam_width: int = 1,
                      batch_size: int = 256) -> list:
        """Decode strings; OOV inputs yield an :class:`OutOfVocabularyError` entry."""
        results: list = [None] * len(tokens)
        todo = []
        for i, tok in enumerate(tokens):
            try:
                ids = self.src_vocab.encode(tok)
            except OutOfVocabularyError as exc:
                results[i] = exc
                continue
            if not ids:
                results[i] = ""
                continue
            todo.append((i, ids))
        # length-sorted batches keep padding small
        todo.sort(key=lambda it: len(it[1]))
        for start in range(0, len(todo), batch_size):
            chunk = todo[start:start + batch_size]
            outs = self.decode_ids([ids for _, ids in chunk], beam_width=beam_width)
            for (i, _), out in zip(chunk, outs):
                results[i] = self.tgt_vocab.decode(out)
        return results
