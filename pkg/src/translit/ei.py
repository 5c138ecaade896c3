"""Epsilon-insertion model: (bi)directional recurrent stack trained with CTC.

The source is expanded with ``k`` epsilons around every codepoint, fed through
an embedding and a recurrent stack, and projected to one distribution per
frame over blank plus the target alphabet.
"""
from __future__ import annotations

import numpy as np

from .base import OUTPUT_OFFSET, Model, pad_batch
from .cells import LSTM, EmbeddingTable, LayerStack, backprop_stack, run_stack
from .ctc import InfeasibleTargetError, ctc_beam_decode, ctc_greedy_decode, ctc_loss, \
    insert_epsilons
from .dataset import EPSILON_ID
from .numeric import log_softmax, make_rng, uniform_init

DEFAULTS = dict(cell=LSTM, layers=1, hidden=128, bidirectional=True, epsilons=3,
                embed_dim=None, forget_bias=0.0, dtype="float64")


class EpsilonModel(Model):
    family = "ei"

    def __init__(self, config, src_vocab, tgt_vocab, params=None, seed=0):
        cfg = {**DEFAULTS, **config}
        if cfg["embed_dim"] is None:
            cfg["embed_dim"] = cfg["hidden"]
        if params is None:
            params = self._init_params(cfg, src_vocab, tgt_vocab, seed)
        super().__init__(cfg, src_vocab, tgt_vocab, params)
        self.emb = EmbeddingTable(self.params["src_emb"])
        self.stack = LayerStack.from_arrays(self.params, "enc.", cfg["cell"], cfg["layers"],
                                            cfg["bidirectional"])

    @staticmethod
    def _init_params(cfg, src_vocab, tgt_vocab, seed):
        rng = make_rng(seed)
        dt = np.dtype(cfg["dtype"])
        params = {"src_emb": EmbeddingTable.init(rng, len(src_vocab), cfg["embed_dim"], dt).table}
        stack = LayerStack.build(rng, cfg["cell"], cfg["embed_dim"], cfg["hidden"], cfg["layers"],
                                 cfg["bidirectional"], cfg["forget_bias"], dt)
        params.update(stack.named_arrays("enc."))
        out = stack.output_size
        params["out.W"] = uniform_init(rng, (out, tgt_vocab.content_size + 1), out, dt)
        params["out.b"] = np.zeros(tgt_vocab.content_size + 1, dtype=dt)
        return params

    def expand(self, src_ids):
        return insert_epsilons(list(src_ids), self.config["epsilons"], epsilon=EPSILON_ID)

    def frame_logprobs(self, sources):
        """Per-frame log-distributions for a batch: ``(T, B, V + 1)`` plus cache."""
        ids, mask = pad_batch([self.expand(s) for s in sources], dtype=self.dtype)
        X = self.emb.lookup(ids)
        outs, cache = run_stack(self.stack, X, mask)
        top = outs[-1]
        logits = top @ self.params["out.W"] + self.params["out.b"]
        return log_softmax(logits, axis=-1), (ids, mask, cache, top)

    def loss_and_grads(self, sources, targets):
        """Mean CTC NLL per sequence. Infeasible pairs are skipped and counted."""
        logp, (ids, mask, cache, top) = self.frame_logprobs(sources)
        lengths = mask.sum(axis=0).astype(int)
        dlogp = np.zeros(logp.shape, dtype=np.float64)
        total = 0.0
        used = 0
        skipped = 0
        for b, tgt in enumerate(targets):
            labels = [t - OUTPUT_OFFSET for t in tgt]
            try:
                nll, g = ctc_loss(logp[:lengths[b], b], labels)
            except InfeasibleTargetError:
                skipped += 1
                continue
            total += nll
            dlogp[:lengths[b], b] = g
            used += 1
        grads = self.zero_grads()
        if used == 0:
            return 0.0, grads, {"skipped": skipped, "sequences": 0}
        dlogp /= used
        probs = np.exp(logp)
        dlogits = (dlogp - probs * dlogp.sum(axis=-1, keepdims=True)).astype(self.dtype)
        H = top.shape[-1]
        grads["out.W"] += top.reshape(-1, H).T @ dlogits.reshape(-1, dlogits.shape[-1])
        grads["out.b"] += dlogits.sum(axis=(0, 1))
        d_top = dlogits @ self.params["out.W"].T
        gstack = LayerStack.from_arrays(grads, "enc.", self.config["cell"],
                                        self.config["layers"], self.config["bidirectional"])
        dX, _ = backprop_stack(self.stack, cache, d_top, gstack)
        self.emb.accumulate(grads["src_emb"], ids, dX)
        return total / used, grads, {"skipped": skipped, "sequences": used}

    def decode_ids(self, sources, beam_width=1):
        logp, (_, mask, _, _) = self.frame_logprobs(sources)
        lengths = mask.sum(axis=0).astype(int)
        out = []
        for b in range(len(sources)):
            frames = logp[:lengths[b], b]
            labels = ctc_greedy_decode(frames) if beam_width <= 1 \
                else ctc_beam_decode(frames, beam_width)
            out.append([lab + OUTPUT_OFFSET for lab in labels])
        return out
