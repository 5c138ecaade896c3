"""LSTM/GRU cells, embeddings and stacked (bi)directional sequence runners.

Weight layout is fixed so checkpoints stay portable:

* LSTM: ``W`` is ``(D, 4H)``, ``U`` is ``(H, 4H)``, ``b`` is ``(4H,)`` with
  gate blocks in the order input, forget, cell candidate, output (i, f, g, o).
* GRU: ``W`` is ``(D, 3H)``, ``U`` is ``(H, 3H)``, ``b`` is ``(3H,)`` with
  blocks update, reset, candidate (z, r, c).

Row vectors throughout: a step computes ``x @ W + h @ U + b``. Sequences are
time-major ``(T, B, D)``; an optional ``(T, B)`` mask marks real frames, and
on padded frames the state is carried through unchanged.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numeric import ShapeError, sigmoid, uniform_init

LSTM = "lstm"
GRU = "gru"
CELL_KINDS = (LSTM, GRU)


@dataclass
class LstmParams:
    W: np.ndarray
    U: np.ndarray
    b: np.ndarray

    n_gates = 4

    @property
    def hidden_size(self) -> int:
        return self.U.shape[0]

    @property
    def input_size(self) -> int:
        return self.W.shape[0]

    @classmethod
    def init(cls, rng, input_size, hidden_size, forget_bias=0.0, dtype=np.float64):
        H = hidden_size
        b = np.zeros(4 * H, dtype=dtype)
        b[H:2 * H] = forget_bias
        return cls(
            uniform_init(rng, (input_size, 4 * H), input_size, dtype),
            uniform_init(rng, (H, 4 * H), H, dtype),
            b,
        )

    def arrays(self) -> dict[str, np.ndarray]:
        return {"W": self.W, "U": self.U, "b": self.b}

    def zeros_like(self):
        return type(self)(*(np.zeros_like(a) for a in self.arrays().values()))

    def check(self):
        H = self.hidden_size
        if self.U.shape != (H, self.n_gates * H) or self.W.shape[1] != self.n_gates * H \
                or self.b.shape != (self.n_gates * H,):
            raise ShapeError(
                f"inconsistent {type(self).__name__} shapes W{self.W.shape} "
                f"U{self.U.shape} b{self.b.shape}")


@dataclass
class GruParams(LstmParams):
    n_gates = 3

    @classmethod
    def init(cls, rng, input_size, hidden_size, forget_bias=0.0, dtype=np.float64):
        H = hidden_size
        return cls(
            uniform_init(rng, (input_size, 3 * H), input_size, dtype),
            uniform_init(rng, (H, 3 * H), H, dtype),
            np.zeros(3 * H, dtype=dtype),
        )


@dataclass
class EmbeddingTable:
    table: np.ndarray  # (V, E)

    @classmethod
    def init(cls, rng, vocab_size, dim, dtype=np.float64):
        # a lookup is a one-hot product with fan-in 1
        return cls(uniform_init(rng, (vocab_size, dim), 1, dtype))

    def lookup(self, ids) -> np.ndarray:
        ids = np.asarray(ids)
        if ids.size and (ids.min() < 0 or ids.max() >= self.table.shape[0]):
            raise IndexError(f"embedding id out of range [0, {self.table.shape[0]})")
        return self.table[ids]

    def accumulate(self, grad_table: np.ndarray, ids, d_out) -> None:
        np.add.at(grad_table, np.asarray(ids).reshape(-1),
                  d_out.reshape(-1, grad_table.shape[1]))


def _params_class(kind):
    if kind == LSTM:
        return LstmParams
    if kind == GRU:
        return GruParams
    raise ValueError(f"unknown cell kind {kind!r}")


# ---------------------------------------------------------------- single steps
# Steps take the input projection ``xw = x @ W + b`` precomputed, so a layer can
# project every frame with one matmul. Backward steps return the gate
# pre-activation gradient ``da``; weight gradients are formed per layer.

def _lstm_forward(p: LstmParams, xw, h, c):
    H = h.shape[-1]
    a = xw + h @ p.U
    i = sigmoid(a[:, :H])
    f = sigmoid(a[:, H:2 * H])
    g = np.tanh(a[:, 2 * H:3 * H])
    o = sigmoid(a[:, 3 * H:])
    c_new = f * c + i * g
    tc = np.tanh(c_new)
    h_new = o * tc
    return h_new, c_new, (h, c, i, f, g, o, tc)


def _lstm_backward(p: LstmParams, cache, dh, dc):
    h, c, i, f, g, o, tc = cache
    do = dh * tc
    dc = dc + dh * o * (1.0 - tc * tc)
    da = np.concatenate([
        dc * g * i * (1.0 - i),
        dc * c * f * (1.0 - f),
        dc * i * (1.0 - g * g),
        do * o * (1.0 - o),
    ], axis=1)
    return da, da @ p.U.T, dc * f


def _gru_forward(p: GruParams, xw, h, c=None):
    H = h.shape[-1]
    azr = xw[:, :2 * H] + h @ p.U[:, :2 * H]
    z = sigmoid(azr[:, :H])
    r = sigmoid(azr[:, H:])
    rh = r * h
    cand = np.tanh(xw[:, 2 * H:] + rh @ p.U[:, 2 * H:])
    h_new = h + z * (cand - h)
    return h_new, None, (h, z, r, rh, cand)


def _gru_backward(p: GruParams, cache, dh, dc=None):
    h, z, r, rh, cand = cache
    H = h.shape[-1]
    dz = dh * (cand - h)
    dh_prev = dh * (1.0 - z)
    dac = dh * z * (1.0 - cand * cand)
    drh = dac @ p.U[:, 2 * H:].T
    dh_prev += drh * r
    dazr = np.concatenate([dz * z * (1.0 - z), drh * h * r * (1.0 - r)], axis=1)
    dh_prev += dazr @ p.U[:, :2 * H].T
    return np.concatenate([dazr, dac], axis=1), dh_prev, None


def _accumulate_weights(kind, p, grads, X, DA, caches):
    """Weight gradients of one direction from all frames at once."""
    D, G = X.shape[-1], DA.shape[-1]
    X2, DA2 = X.reshape(-1, D), DA.reshape(-1, G)
    grads.W += X2.T @ DA2
    grads.b += DA2.sum(axis=0)
    H = p.hidden_size
    Hprev = np.stack([c[0] for c in caches]).reshape(-1, H)
    if kind == LSTM:
        grads.U += Hprev.T @ DA2
    else:
        RH = np.stack([c[3] for c in caches]).reshape(-1, H)
        grads.U[:, :2 * H] += Hprev.T @ DA2[:, :2 * H]
        grads.U[:, 2 * H:] += RH.T @ DA2[:, 2 * H:]
    return DA @ p.W.T


def _check_step(p, x, h):
    p.check()
    if x.shape[-1] != p.input_size or h.shape[-1] != p.hidden_size:
        raise ShapeError(
            f"step got x{x.shape}, h{h.shape} for input size {p.input_size}, "
            f"hidden size {p.hidden_size}")


def lstm_step(p: LstmParams, x, h, c):
    """One LSTM step; accepts single vectors or ``(B, ·)`` batches."""
    x, h, c = (np.asarray(v) for v in (x, h, c))
    _check_step(p, x, h)
    if c.shape != h.shape:
        raise ShapeError(f"cell state {c.shape} does not match hidden {h.shape}")
    single = x.ndim == 1
    xw = np.atleast_2d(x) @ p.W + p.b
    h2, c2, _ = _lstm_forward(p, xw, np.atleast_2d(h), np.atleast_2d(c))
    return (h2[0], c2[0]) if single else (h2, c2)


def gru_step(p: GruParams, x, h):
    """One GRU step; accepts single vectors or ``(B, ·)`` batches."""
    x, h = np.asarray(x), np.asarray(h)
    _check_step(p, x, h)
    single = x.ndim == 1
    h2, _, _ = _gru_forward(p, np.atleast_2d(x) @ p.W + p.b, np.atleast_2d(h))
    return h2[0] if single else h2


_FORWARD = {LSTM: _lstm_forward, GRU: _gru_forward}
_BACKWARD = {LSTM: _lstm_backward, GRU: _gru_backward}


# ------------------------------------------------------------ layers & stacks

@dataclass
class Layer:
    kind: str
    fwd: LstmParams
    bwd: LstmParams | None = None

    @property
    def bidirectional(self) -> bool:
        return self.bwd is not None

    @property
    def hidden_size(self) -> int:
        return self.fwd.hidden_size

    @property
    def input_size(self) -> int:
        return self.fwd.input_size

    @property
    def output_size(self) -> int:
        return self.hidden_size * (2 if self.bidirectional else 1)

    def directions(self):
        yield "fwd", self.fwd
        if self.bwd is not None:
            yield "bwd", self.bwd

    def zeros_like(self) -> "Layer":
        return Layer(self.kind, self.fwd.zeros_like(),
                     None if self.bwd is None else self.bwd.zeros_like())


@dataclass
class LayerStack:
    layers: list[Layer] = field(default_factory=list)

    def __post_init__(self):
        for k, layer in enumerate(self.layers):
            if layer.kind not in CELL_KINDS:
                raise ValueError(f"unknown cell kind {layer.kind!r}")
            for _, p in layer.directions():
                p.check()
            if layer.bwd is not None and layer.bwd.W.shape != layer.fwd.W.shape:
                raise ShapeError(f"layer {k}: forward and backward shapes differ")
            if k and layer.input_size != self.layers[k - 1].output_size:
                raise ShapeError(
                    f"layer {k} expects input {layer.input_size} but layer {k - 1} "
                    f"emits {self.layers[k - 1].output_size}")

    @classmethod
    def build(cls, rng, kind, input_size, hidden_size, num_layers, bidirectional,
              forget_bias=0.0, dtype=np.float64) -> "LayerStack":
        P = _params_class(kind)
        layers = []
        d = input_size
        for _ in range(num_layers):
            fwd = P.init(rng, d, hidden_size, forget_bias, dtype)
            bwd = P.init(rng, d, hidden_size, forget_bias, dtype) if bidirectional else None
            layers.append(Layer(kind, fwd, bwd))
            d = layers[-1].output_size
        return cls(layers)

    @classmethod
    def from_arrays(cls, arrays: dict[str, np.ndarray], prefix: str, kind: str,
                    num_layers: int, bidirectional: bool) -> "LayerStack":
        """Rebuild a stack whose parameters alias the arrays of ``arrays``."""
        P = _params_class(kind)

        def get(k, d):
            return P(*(arrays[f"{prefix}{k}.{d}.{n}"] for n in ("W", "U", "b")))

        return cls([Layer(kind, get(k, "fwd"), get(k, "bwd") if bidirectional else None)
                    for k in range(num_layers)])

    @property
    def output_size(self) -> int:
        return self.layers[-1].output_size

    @property
    def input_size(self) -> int:
        return self.layers[0].input_size

    def named_arrays(self, prefix: str) -> dict[str, np.ndarray]:
        out = {}
        for k, layer in enumerate(self.layers):
            for d, p in layer.directions():
                for n, a in p.arrays().items():
                    out[f"{prefix}{k}.{d}.{n}"] = a
        return out

    def zeros_like(self) -> "LayerStack":
        return LayerStack([layer.zeros_like() for layer in self.layers])


def reverse_index(mask: np.ndarray) -> np.ndarray:
    """Per-column time index that reverses each sequence within its length.

    Padded frames keep their position, so the map is an involution.
    """
    T, B = mask.shape
    lengths = mask.sum(axis=0).astype(np.int64)
    t = np.arange(T)[:, None]
    return np.where(t < lengths[None, :], lengths[None, :] - 1 - t, t)


def _gather_time(X, idx):
    return X[idx, np.arange(X.shape[1])[None, :]]


def _run_direction(kind, p, X, mask, h0, c0):
    T, B, _ = X.shape
    H = p.hidden_size
    h = np.zeros((B, H), X.dtype) if h0 is None else h0
    c = None
    if kind == LSTM:
        c = np.zeros((B, H), X.dtype) if c0 is None else c0
    step = _FORWARD[kind]
    XW = X @ p.W + p.b
    out = np.empty((T, B, H), dtype=X.dtype)
    caches = []
    for t in range(T):
        hn, cn, cache = step(p, XW[t], h, c)
        if mask is not None:
            m = mask[t][:, None]
            hn = m * hn + (1.0 - m) * h
            if cn is not None:
                cn = m * cn + (1.0 - m) * c
        out[t] = hn
        caches.append(cache)
        h, c = hn, cn
    return out, (X, caches)


def _backprop_direction(kind, p, cache, d_out, mask, grads):
    X, caches = cache
    T, B, H = d_out.shape
    step = _BACKWARD[kind]
    DA = np.empty((T, B, p.n_gates * H), dtype=d_out.dtype)
    dh = np.zeros((B, H), d_out.dtype)
    dc = np.zeros((B, H), d_out.dtype) if kind == LSTM else None
    for t in range(T - 1, -1, -1):
        dh = dh + d_out[t]
        if mask is None:
            DA[t], dh, dc = step(p, caches[t], dh, dc)
        else:
            m = mask[t][:, None]
            DA[t], dhp, dcp = step(p, caches[t], m * dh, None if dc is None else m * dc)
            dh = dhp + (1.0 - m) * dh
            if dc is not None:
                dc = dcp + (1.0 - m) * dc
    dX = _accumulate_weights(kind, p, grads, X, DA, caches)
    return dX, dh, dc


def run_stack(stack: LayerStack, X: np.ndarray, mask=None, init=None):
    """Forward a ``(T, B, D)`` batch through every layer.

    ``init`` optionally gives per-layer ``(h0, c0)`` for unidirectional layers.
    Returns ``(outputs, cache)`` with one ``(T, B, out)`` array per layer.
    """
    if X.ndim != 3 or X.shape[0] == 0:
        raise ValueError("run_stack needs a nonempty (T, B, D) batch")
    if X.shape[2] != stack.input_size:
        raise ShapeError(f"input width {X.shape[2]} != stack input size {stack.input_size}")
    if mask is not None:
        mask = np.asarray(mask, dtype=X.dtype)
    rev = None
    outputs, caches = [], []
    inp = X
    for k, layer in enumerate(stack.layers):
        h0, c0 = (None, None) if init is None or init[k] is None else init[k]
        out_f, cf = _run_direction(layer.kind, layer.fwd, inp, mask, h0, c0)
        cb = None
        if layer.bidirectional:
            if rev is None:
                rev = reverse_index(mask) if mask is not None else \
                    np.repeat(np.arange(X.shape[0])[::-1, None], X.shape[1], axis=1)
            out_b, cb = _run_direction(layer.kind, layer.bwd, _gather_time(inp, rev), mask,
                                       None, None)
            out = np.concatenate([out_f, _gather_time(out_b, rev)], axis=2)
        else:
            out = out_f
        outputs.append(out)
        caches.append((cf, cb))
        inp = out
    return outputs, (caches, mask, rev)


def backprop_stack(stack: LayerStack, cache, d_top: np.ndarray, grads: LayerStack):
    """Accumulate parameter gradients into ``grads``; return input and init grads.

    Returns ``(dX, d_init)`` where ``d_init[k]`` is ``(dh0, dc0)`` of layer k's
    forward direction (``dc0`` is ``None`` for GRU).
    """
    caches, mask, rev = cache
    d = d_top
    d_init = [None] * len(stack.layers)
    for k in range(len(stack.layers) - 1, -1, -1):
        layer, g = stack.layers[k], grads.layers[k]
        cf, cb = caches[k]
        H = layer.hidden_size
        if layer.bidirectional:
            d_f, d_b = d[:, :, :H], _gather_time(d[:, :, H:], rev)
        else:
            d_f = d
        dX, dh0, dc0 = _backprop_direction(layer.kind, layer.fwd, cf, d_f, mask, g.fwd)
        d_init[k] = (dh0, dc0)
        if layer.bidirectional:
            dXb, _, _ = _backprop_direction(layer.kind, layer.bwd, cb, d_b, mask, g.bwd)
            dX = dX + _gather_time(dXb, rev)
        d = dX
    return d, d_init


def run_sequence(stack: LayerStack, inputs, mask=None):
    """Run a stack on one ``(T, D)`` sequence or a ``(T, B, D)`` batch.

    Returns the hidden-state sequence of every layer. Bidirectional layers
    concatenate forward and backward states per time step.
    """
    X = np.asarray(inputs)
    if X.shape[0] == 0:
        raise ValueError("empty input sequence")
    single = X.ndim == 2
    outputs, _ = run_stack(stack, X[:, None, :] if single else X, mask)
    return [o[:, 0, :] for o in outputs] if single else outputs


def backprop_sequence(stack: LayerStack, inputs, upstream, mask=None):
    """Exact BPTT gradients of ``sum(upstream * top_outputs)``.

    Returns ``(param_grads, input_grads)``; ``param_grads`` is a
    :class:`LayerStack` of gradient arrays with the same layout as ``stack``.
    """
    X = np.asarray(inputs)
    up = np.asarray(upstream)
    single = X.ndim == 2
    if single:
        X, up = X[:, None, :], up[:, None, :] if up.ndim == 2 else up
    outputs, cache = run_stack(stack, X, mask)
    if up.shape != outputs[-1].shape:
        raise ShapeError(f"upstream gradient {up.shape} != outputs {outputs[-1].shape}")
    grads = stack.zeros_like()
    dX, _ = backprop_stack(stack, cache, up, grads)
    return grads, (dX[:, 0, :] if single else dX)


def stack_step(stack: LayerStack, x: np.ndarray, states):
    """Advance a unidirectional stack by one frame for inference.

    ``states`` is a per-layer list of ``(h, c)``; returns ``(top_h, new_states)``.
    """
    new = []
    inp = x
    for layer, (h, c) in zip(stack.layers, states):
        h2, c2, _ = _FORWARD[layer.kind](layer.fwd, inp @ layer.fwd.W + layer.fwd.b, h, c)
        new.append((h2, c2))
        inp = h2
    return inp, new
