"""Attentional encoder-decoder over codepoints.

Layout of one decoding step ``t`` (row vectors)::

    s_t      = decoder_stack(embed(y_{t-1}), s_{t-1})
    score_tj = v . tanh(s_t Wq + a_j Wk)            additive attention
    ctx_t    = sum_j softmax(score_t)_j a_j
    att_t    = tanh([s_t, ctx_t] Wc + bc)
    p(y_t)   = softmax(att_t Wo + bo)

The decoder's initial hidden state per layer is ``tanh(final Wi + bi)`` where
``final`` joins the last forward state and, for bidirectional encoders, the
last backward state of the top encoder layer. LSTM cell states start at zero.
The output softmax covers eos plus the target alphabet (column 0 is eos).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import OUTPUT_OFFSET, Model, pad_batch
from .cells import GRU, LSTM, EmbeddingTable, LayerStack, backprop_stack, run_stack, stack_step
from .dataset import EOS_ID, GO_ID
from .numeric import log_softmax, make_rng, softmax, uniform_init

DEFAULTS = dict(cell=GRU, layers=1, hidden=128, bidirectional=False, reverse_input=True,
                embed_dim=None, attention_dim=None, forget_bias=0.0, dtype="float64")


@dataclass
class DecodeLimits:
    max_length: int | None = None
    beam_width: int = 1

    def __post_init__(self):
        if self.max_length is not None and self.max_length < 1:
            raise ValueError("max_length must be >= 1")
        if self.beam_width < 1:
            raise ValueError("beam width must be >= 1")

    def length_for(self, source_length: int) -> int:
        return self.max_length if self.max_length is not None else 2 * source_length + 5


class Seq2SeqModel(Model):
    family = "seq2seq"

    def __init__(self, config, src_vocab, tgt_vocab, params=None, seed=0):
        cfg = {**DEFAULTS, **config}
        for key in ("embed_dim", "attention_dim"):
            if cfg[key] is None:
                cfg[key] = cfg["hidden"]
        if params is None:
            params = self._init_params(cfg, src_vocab, tgt_vocab, seed)
        super().__init__(cfg, src_vocab, tgt_vocab, params)
        self.src_emb = EmbeddingTable(self.params["src_emb"])
        self.tgt_emb = EmbeddingTable(self.params["tgt_emb"])
        self.encoder = LayerStack.from_arrays(self.params, "enc.", cfg["cell"], cfg["layers"],
                                              cfg["bidirectional"])
        self.decoder = LayerStack.from_arrays(self.params, "dec.", cfg["cell"], cfg["layers"],
                                              False)

    @staticmethod
    def _init_params(cfg, src_vocab, tgt_vocab, seed):
        rng = make_rng(seed)
        dt = np.dtype(cfg["dtype"])
        E, H, A, L = cfg["embed_dim"], cfg["hidden"], cfg["attention_dim"], cfg["layers"]
        p = {"src_emb": EmbeddingTable.init(rng, len(src_vocab), E, dt).table}
        enc = LayerStack.build(rng, cfg["cell"], E, H, L, cfg["bidirectional"],
                               cfg["forget_bias"], dt)
        p.update(enc.named_arrays("enc."))
        Ha = enc.output_size
        p["tgt_emb"] = EmbeddingTable.init(rng, len(tgt_vocab), E, dt).table
        dec = LayerStack.build(rng, cfg["cell"], E, H, L, False, cfg["forget_bias"], dt)
        p.update(dec.named_arrays("dec."))
        for k in range(L):
            p[f"init.{k}.W"] = uniform_init(rng, (Ha, H), Ha, dt)
            p[f"init.{k}.b"] = np.zeros(H, dtype=dt)
        p["att.Wq"] = uniform_init(rng, (H, A), H, dt)
        p["att.Wk"] = uniform_init(rng, (Ha, A), Ha, dt)
        p["att.v"] = uniform_init(rng, (A,), A, dt)
        p["comb.W"] = uniform_init(rng, (H + Ha, H), H + Ha, dt)
        p["comb.b"] = np.zeros(H, dtype=dt)
        V = tgt_vocab.content_size + 1
        p["out.W"] = uniform_init(rng, (H, V), H, dt)
        p["out.b"] = np.zeros(V, dtype=dt)
        return p

    # ------------------------------------------------------------ encoder side

    def _prepare_sources(self, sources, reverse=None):
        reverse = self.config["reverse_input"] if reverse is None else reverse
        for s in sources:
            if len(s) == 0:
                raise ValueError("empty source sequence")
            if min(s) < 0 or max(s) >= len(self.src_vocab):
                raise IndexError(f"source id out of vocabulary range [0, {len(self.src_vocab)})")
        seqs = [list(s)[::-1] if reverse else list(s) for s in sources]
        return pad_batch(seqs, dtype=self.dtype)

    def _encode_batch(self, sources, reverse=None):
        ids, mask = self._prepare_sources(sources, reverse)
        X = self.src_emb.lookup(ids)
        outs, cache = run_stack(self.encoder, X, mask)
        ann = outs[-1]
        final = self._final_state(ann)
        return ids, mask, ann, final, cache

    def _final_state(self, ann):
        if self.config["bidirectional"]:
            H = self.config["hidden"]
            return np.concatenate([ann[-1, :, :H], ann[0, :, H:]], axis=1)
        return ann[-1]

    def _initial_states(self, final):
        states = []
        for k, layer in enumerate(self.decoder.layers):
            h0 = np.tanh(final @ self.params[f"init.{k}.W"] + self.params[f"init.{k}.b"])
            c0 = np.zeros_like(h0) if layer.kind == LSTM else None
            states.append((h0, c0))
        return states

    # ------------------------------------------------------------ attention

    def _attention(self, S, ann, keys, src_mask):
        """Batched attention: ``S`` is ``(Td, B, H)``, ``ann`` ``(Te, B, Ha)``."""
        Q = S @ self.params["att.Wq"]
        Z = np.tanh(Q[:, :, None, :] + keys.transpose(1, 0, 2)[None])
        E = Z @ self.params["att.v"]
        E = np.where(src_mask.T[None] > 0, E, -np.inf)
        W = softmax(E, axis=-1)
        C = np.einsum("tbj,jbh->tbh", W, ann)
        return C, W, Z

    def _output(self, S, C):
        SC = np.concatenate([S, C], axis=-1)
        att = np.tanh(SC @ self.params["comb.W"] + self.params["comb.b"])
        logits = att @ self.params["out.W"] + self.params["out.b"]
        return log_softmax(logits, axis=-1), SC, att

    # ------------------------------------------------------------ training

    def loss_and_grads(self, sources, targets):
        """Mean NLL per target symbol over the batch, with exact gradients.

        Each target must end with the eos id.
        """
        for t in targets:
            if not t or t[-1] != EOS_ID:
                raise ValueError("targets must end with the eos id")
        p = self.params
        src_ids, src_mask, ann, final, enc_cache = self._encode_batch(sources)
        dec_in, dec_mask = pad_batch([[GO_ID] + list(t[:-1]) for t in targets], dtype=self.dtype)
        gold, _ = pad_batch([list(t) for t in targets], pad=EOS_ID)
        gold_idx = gold - OUTPUT_OFFSET
        if gold_idx.min() < 0 or gold_idx.max() >= self.num_outputs:
            raise IndexError("target id outside the output alphabet")
        init = self._initial_states(final)
        dec_outs, dec_cache = run_stack(self.decoder, self.tgt_emb.lookup(dec_in), dec_mask, init)
        S = dec_outs[-1]
        keys = ann @ p["att.Wk"]
        C, W, Z = self._attention(S, ann, keys, src_mask)
        logp, SC, att = self._output(S, C)

        Td, B = gold.shape
        n = dec_mask.sum()
        picked = np.take_along_axis(logp, gold_idx[..., None], axis=-1)[..., 0]
        loss = float(-(picked * dec_mask).sum() / n)

        g = self.zero_grads()
        dlogits = np.exp(logp)
        np.put_along_axis(dlogits, gold_idx[..., None],
                          np.take_along_axis(dlogits, gold_idx[..., None], axis=-1) - 1.0, axis=-1)
        dlogits *= (dec_mask / n)[..., None]
        H = S.shape[-1]
        g["out.W"] += att.reshape(-1, H).T @ dlogits.reshape(-1, dlogits.shape[-1])
        g["out.b"] += dlogits.sum(axis=(0, 1))
        datt = dlogits @ p["out.W"].T
        dpre = datt * (1.0 - att * att)
        g["comb.W"] += SC.reshape(-1, SC.shape[-1]).T @ dpre.reshape(-1, H)
        g["comb.b"] += dpre.sum(axis=(0, 1))
        dSC = dpre @ p["comb.W"].T
        dS = dSC[..., :H].copy()
        dC = dSC[..., H:]

        # attention backward
        dW = np.einsum("tbh,jbh->tbj", dC, ann)
        dann = np.einsum("tbj,tbh->jbh", W, dC)
        dE = W * (dW - (dW * W).sum(axis=-1, keepdims=True))
        g["att.v"] += np.einsum("tbj,tbja->a", dE, Z)
        dZpre = dE[..., None] * p["att.v"] * (1.0 - Z * Z)
        dQ = dZpre.sum(axis=2)
        dK = dZpre.sum(axis=0).transpose(1, 0, 2)
        A = dQ.shape[-1]
        g["att.Wq"] += S.reshape(-1, H).T @ dQ.reshape(-1, A)
        dS += dQ @ p["att.Wq"].T
        g["att.Wk"] += ann.reshape(-1, ann.shape[-1]).T @ dK.reshape(-1, A)
        dann += dK @ p["att.Wk"].T

        # decoder
        gdec = LayerStack.from_arrays(g, "dec.", self.config["cell"], self.config["layers"], False)
        dXd, d_init = backprop_stack(self.decoder, dec_cache, dS, gdec)
        self.tgt_emb.accumulate(g["tgt_emb"], dec_in, dXd)
        dfinal = np.zeros_like(final)
        for k, (h0, _) in enumerate(init):
            dh0 = d_init[k][0]
            dpre0 = dh0 * (1.0 - h0 * h0)
            g[f"init.{k}.W"] += final.T @ dpre0
            g[f"init.{k}.b"] += dpre0.sum(axis=0)
            dfinal += dpre0 @ p[f"init.{k}.W"].T
        if self.config["bidirectional"]:
            Hh = self.config["hidden"]
            dann[-1, :, :Hh] += dfinal[:, :Hh]
            dann[0, :, Hh:] += dfinal[:, Hh:]
        else:
            dann[-1] += dfinal

        # encoder
        genc = LayerStack.from_arrays(g, "enc.", self.config["cell"], self.config["layers"],
                                      self.config["bidirectional"])
        dXe, _ = backprop_stack(self.encoder, enc_cache, dann, genc)
        self.src_emb.accumulate(g["src_emb"], src_ids, dXe)
        return loss, g, {"symbols": int(n), "sequences": B}

    # ------------------------------------------------------------ inference

    def _step(self, y, states, ann, keys, src_mask):
        top, states = stack_step(self.decoder, self.tgt_emb.lookup(y), states)
        C, W, _ = self._attention(top[None], ann, keys, src_mask)
        logp, _, _ = self._output(top[None], C)
        return logp[0], states, W[0]

    def decode_ids(self, sources, beam_width=1, limits: DecodeLimits | None = None):
        limits = limits or DecodeLimits(beam_width=beam_width)
        if limits.beam_width > 1:
            return [self.beam_search(s, limits) for s in sources]
        return self.greedy_batch(sources, limits)

    def greedy_batch(self, sources, limits: DecodeLimits | None = None):
        limits = limits or DecodeLimits()
        _, src_mask, ann, final, _ = self._encode_batch(sources)
        keys = ann @ self.params["att.Wk"]
        states = self._initial_states(final)
        B = len(sources)
        max_len = np.array([limits.length_for(len(s)) for s in sources])
        y = np.full(B, GO_ID, dtype=np.int64)
        out = [[] for _ in range(B)]
        live = np.ones(B, dtype=bool)
        for step in range(int(max_len.max())):
            logp, states, _ = self._step(y, states, ann, keys, src_mask)
            y = logp.argmax(axis=-1) + OUTPUT_OFFSET
            for b in np.flatnonzero(live):
                if y[b] == EOS_ID:
                    live[b] = False
                else:
                    out[b].append(int(y[b]))
                    if len(out[b]) >= max_len[b]:
                        live[b] = False
            if not live.any():
                break
        return out

    def beam_search(self, source, limits: DecodeLimits):
        """Length-normalised beam search for one source sequence.

        Live hypotheses compete on total log-probability; finished ones
        (ended by eos, or cut at the length limit) on log-probability per
        emitted symbol, eos included. Width 1 reproduces greedy decoding.
        """
        width = limits.beam_width
        max_len = limits.length_for(len(source))
        _, src_mask, ann, final, _ = self._encode_batch([source])
        keys = ann @ self.params["att.Wk"]
        states = self._initial_states(final)
        hyps = [((), 0.0)]
        finished = []
        for step in range(max_len):
            n = len(hyps)
            rep = lambda a: np.repeat(a, n, axis=1)  # noqa: E731
            y = np.array([h[-1] if h else GO_ID for h, _ in hyps], dtype=np.int64)
            logp, new_states, _ = self._step(y, states, rep(ann), rep(keys), rep(src_mask))
            scores = np.array([s for _, s in hyps])[:, None] + logp
            V = logp.shape[1]
            order = np.lexsort((np.tile(np.arange(V), n), np.repeat(np.arange(n), V),
                                -scores.reshape(-1)))[:width]
            keep, next_hyps = [], []
            for flat in order:
                b, j = divmod(int(flat), V)
                seq, score = hyps[b][0], float(scores[b, j])
                if j == 0:
                    finished.append((score / (len(seq) + 1), seq))
                elif step + 1 == max_len:
                    finished.append((score / max_len, seq + (j + OUTPUT_OFFSET,)))
                else:
                    next_hyps.append((seq + (j + OUTPUT_OFFSET,), score))
                    keep.append(b)
            if not next_hyps:
                break
            idx = np.array(keep)
            states = [(h[idx], None if c is None else c[idx]) for h, c in new_states]
            hyps = next_hyps
        best = max(enumerate(finished), key=lambda it: (it[1][0], -it[0]))[1]
        return list(best[1])


# ---------------------------------------------------------------- functional API

def encode(model: Seq2SeqModel, source_ids, reverse: bool | None = None) -> np.ndarray:
    """Annotations ``(T, Ha)`` indexed in the order the encoder consumed them."""
    return model._encode_batch([list(source_ids)], reverse)[2][:, 0, :]


def attend(model: Seq2SeqModel, query, annotations):
    """Additive attention of one query over ``(T, Ha)`` annotations."""
    ann = np.asarray(annotations)[:, None, :]
    keys = ann @ model.params["att.Wk"]
    mask = np.ones((ann.shape[0], 1))
    C, W, _ = model._attention(np.asarray(query)[None, None, :], ann, keys, mask)
    return C[0, 0], W[0, 0]


def teacher_forced_loss(model: Seq2SeqModel, source_ids, target_ids):
    loss, grads, _ = model.loss_and_grads([list(source_ids)], [list(target_ids)])
    return loss, grads


def greedy_decode(model: Seq2SeqModel, source_ids, limits: DecodeLimits | None = None):
    return model.greedy_batch([list(source_ids)], limits)[0]


def beam_decode(model: Seq2SeqModel, source_ids, limits: DecodeLimits):
    return model.beam_search(list(source_ids), limits)
