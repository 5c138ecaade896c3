"""Versioned binary checkpoint format.

Layout::

    b"TLITCKPT"                      8-byte magic
    uint32 LE                        format version
    uint64 LE                        header length in bytes
    header                           UTF-8 JSON, sorted keys, compact separators
    blobs                            raw little-endian IEEE-754 arrays

The header carries ``family``, ``hyperparameters``, ``model_config``, the
content symbols of both vocabularies, training ``metadata`` and a ``blobs``
directory of ``{name, dtype, shape, offset, nbytes}`` entries whose offsets
count from the first blob byte, in directory order.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import CodepointVocabulary

MAGIC = b"TLITCKPT"
VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass
class ModelCheckpoint:
    family: str
    hyperparameters: dict
    model_config: dict
    source_vocab: CodepointVocabulary
    target_vocab: CodepointVocabulary
    params: dict[str, np.ndarray]
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_model(cls, model, hyperparameters=None, metadata=None) -> "ModelCheckpoint":
        return cls(model.family, dict(hyperparameters or {}), dict(model.config),
                   model.src_vocab, model.tgt_vocab, model.copy_params(), dict(metadata or {}))

    def header(self) -> dict:
        blobs = []
        offset = 0
        for name, arr in self.params.items():
            dt = arr.dtype.newbyteorder("<")
            blobs.append({"name": name, "dtype": dt.str, "shape": list(arr.shape),
                          "offset": offset, "nbytes": arr.nbytes})
            offset += arr.nbytes
        return {
            "family": self.family,
            "hyperparameters": self.hyperparameters,
            "model_config": self.model_config,
            "source_vocab": self.source_vocab.content(),
            "target_vocab": self.target_vocab.content(),
            "metadata": self.metadata,
            "blobs": blobs,
        }

    def to_bytes(self) -> bytes:
        head = json.dumps(self.header(), sort_keys=True, ensure_ascii=False,
                          separators=(",", ":")).encode("utf-8")
        parts = [MAGIC, struct.pack("<IQ", VERSION, len(head)), head]
        for arr in self.params.values():
            parts.append(np.ascontiguousarray(arr, dtype=arr.dtype.newbyteorder("<")).tobytes())
        return b"".join(parts)

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "ModelCheckpoint":
        if data[:8] != MAGIC:
            raise CheckpointError("not a checkpoint (bad magic)")
        if len(data) < 20:
            raise CheckpointError("truncated checkpoint")
        version, head_len = struct.unpack("<IQ", data[8:20])
        if version != VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version} (expected {VERSION})")
        head = json.loads(data[20:20 + head_len].decode("utf-8"))
        base = 20 + head_len
        params = {}
        for blob in head["blobs"]:
            start = base + blob["offset"]
            raw = data[start:start + blob["nbytes"]]
            if len(raw) != blob["nbytes"]:
                raise CheckpointError(f"truncated blob {blob['name']}")
            arr = np.frombuffer(raw, dtype=np.dtype(blob["dtype"])).reshape(blob["shape"])
            params[blob["name"]] = arr.astype(arr.dtype.newbyteorder("="), copy=True)
        return cls(head["family"], head["hyperparameters"], head["model_config"],
                   CodepointVocabulary(head["source_vocab"]),
                   CodepointVocabulary(head["target_vocab"]), params, head["metadata"])

    @classmethod
    def load(cls, path) -> "ModelCheckpoint":
        return cls.from_bytes(Path(path).read_bytes())

    def to_model(self):
        from .ei import EpsilonModel
        from .seq2seq import Seq2SeqModel

        classes = {"ei": EpsilonModel, "seq2seq": Seq2SeqModel}
        if self.family not in classes:
            raise CheckpointError(f"unknown model family {self.family!r}")
        params = {k: v.copy() for k, v in self.params.items()}
        return classes[self.family](self.model_config, self.source_vocab, self.target_vocab,
                                    params=params)
