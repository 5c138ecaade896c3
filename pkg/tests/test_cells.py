import math

import numpy as np
import pytest

from translit.cells import (GRU, LSTM, GruParams, Layer, LayerStack, LstmParams,
                            backprop_sequence, gru_step, lstm_step, run_sequence)
from translit.numeric import ShapeError, grad_check, make_rng


def zero_lstm(D=1, H=1):
    return LstmParams(np.zeros((D, 4 * H)), np.zeros((H, 4 * H)), np.zeros(4 * H))


def zero_gru(D=1, H=1):
    return GruParams(np.zeros((D, 3 * H)), np.zeros((H, 3 * H)), np.zeros(3 * H))


def test_lstm_zero_params_zero_state():
    h, c = lstm_step(zero_lstm(), [0.0], [0.0], [0.0])
    assert h.tolist() == [0.0] and c.tolist() == [0.0]


def test_lstm_zero_params_unit_cell():
    # gates all sigmoid(0) = 0.5, candidate tanh(0) = 0
    h, c = lstm_step(zero_lstm(), [0.0], [0.0], [1.0])
    assert c[0] == pytest.approx(0.5, abs=1e-15)
    assert h[0] == pytest.approx(0.5 * math.tanh(0.5), abs=1e-15)
    assert h[0] == pytest.approx(0.231059, abs=1e-6)


def test_gru_zero_params():
    assert gru_step(zero_gru(), [0.0], [0.0]).tolist() == [0.0]
    # z = 0.5, candidate = 0: h' = 0.5 * 1 + 0.5 * 0
    assert gru_step(zero_gru(), [0.0], [1.0])[0] == pytest.approx(0.5, abs=1e-15)


def test_step_shape_errors():
    with pytest.raises(ShapeError):
        lstm_step(zero_lstm(2, 3), np.zeros(3), np.zeros(3), np.zeros(3))
    with pytest.raises(ShapeError):
        gru_step(zero_gru(2, 3), np.zeros(2), np.zeros(2))


def single_stack(kind, D, H, seed=0, layers=1, bidi=False):
    return LayerStack.build(make_rng(seed), kind, D, H, layers, bidi)


def _param_grad_check(stack, X, up, mask=None):
    grads, dX = backprop_sequence(stack, X, up, mask)

    def loss():
        out = run_sequence(stack, X, mask)[-1]
        return float((out * up).sum())

    worst = 0.0
    for name, p in stack.named_arrays("").items():
        g = grads.named_arrays("")[name]

        def f(v, p=p):
            saved = p.copy()
            p[...] = v.reshape(p.shape)
            try:
                return loss()
            finally:
                p[...] = saved
        worst = max(worst, grad_check(f, p.copy(), g))

    def fx(v):
        return float((run_sequence(stack, v.reshape(X.shape), mask)[-1] * up).sum())
    worst = max(worst, grad_check(fx, X.copy(), dX))
    return worst


@pytest.mark.parametrize("kind", [LSTM, GRU])
def test_single_step_gradient(kind, rng):
    # loss ||h'||^2 on one step: upstream gradient 2h'
    stack = single_stack(kind, 3, 4, seed=2)
    X = rng.normal(size=(1, 3))
    h = run_sequence(stack, X)[-1]
    assert _param_grad_check(stack, X, 2 * h) < 1e-4


@pytest.mark.parametrize("kind", [LSTM, GRU])
def test_bptt_two_layer_bidirectional(kind, rng):
    stack = single_stack(kind, 3, 4, seed=3, layers=2, bidi=True)
    X = rng.normal(size=(5, 3))
    up = rng.normal(size=(5, 8))
    assert _param_grad_check(stack, X, up) < 1e-4


@pytest.mark.parametrize("kind", [LSTM, GRU])
def test_bptt_masked_batch(kind, rng):
    stack = single_stack(kind, 2, 3, seed=4, layers=2, bidi=True)
    X = rng.normal(size=(4, 3, 2))
    mask = np.array([[1, 1, 1], [1, 1, 1], [1, 0, 1], [1, 0, 0]], dtype=float)
    up = rng.normal(size=(4, 3, 6))
    assert _param_grad_check(stack, X, up, mask) < 1e-4


def test_zero_upstream_gives_zero_gradients(rng):
    stack = single_stack(LSTM, 2, 3, layers=2, bidi=True)
    grads, dX = backprop_sequence(stack, rng.normal(size=(4, 2)), np.zeros((4, 6)))
    assert all(not g.any() for g in grads.named_arrays("").values())
    assert not dX.any()


def test_length_one_matches_step(rng):
    stack = single_stack(LSTM, 2, 3, seed=5, bidi=True)
    x = rng.normal(size=2)
    out = run_sequence(stack, x[None])[-1][0]
    layer = stack.layers[0]
    hf, _ = lstm_step(layer.fwd, x, np.zeros(3), np.zeros(3))
    hb, _ = lstm_step(layer.bwd, x, np.zeros(3), np.zeros(3))
    np.testing.assert_array_equal(out[:3], hf)
    np.testing.assert_array_equal(out[3:], hb)
    assert out.shape == (6,)


@pytest.mark.parametrize("kind", [LSTM, GRU])
def test_backward_half_is_reversed_run(kind, rng):
    stack = single_stack(kind, 2, 3, seed=6, bidi=True)
    X = rng.normal(size=(6, 2))
    out = run_sequence(stack, X)[-1]
    # oracle: a plain forward layer with the backward weights on the reversed input
    only_bwd = LayerStack([Layer(kind, stack.layers[0].bwd)])
    ref = run_sequence(only_bwd, X[::-1])[-1][::-1]
    np.testing.assert_allclose(out[:, 3:], ref, atol=1e-14)


def test_masked_batch_matches_unpadded(rng):
    stack = single_stack(GRU, 2, 3, seed=7, layers=2, bidi=True)
    a, b = rng.normal(size=(5, 2)), rng.normal(size=(3, 2))
    X = np.zeros((5, 2, 2))
    X[:, 0], X[:3, 1] = a, b
    mask = np.zeros((5, 2))
    mask[:, 0], mask[:3, 1] = 1, 1
    out = run_sequence(stack, X, mask)[-1]
    np.testing.assert_allclose(out[:, 0], run_sequence(stack, a)[-1], atol=1e-14)
    np.testing.assert_allclose(out[:3, 1], run_sequence(stack, b)[-1], atol=1e-14)


def test_length_preserved_and_bounded(rng):
    for seed in range(20):
        r = make_rng(seed)
        kind = [LSTM, GRU][seed % 2]
        T = int(r.integers(1, 8))
        stack = single_stack(kind, 3, int(r.integers(1, 6)), seed, int(r.integers(1, 3)),
                             bool(seed % 3))
        outs = run_sequence(stack, r.normal(size=(T, 3)) * 10)
        for o in outs:
            assert o.shape[0] == T
            assert np.abs(o).max() < 1 + 1e-9


def test_empty_sequence_rejected():
    with pytest.raises(ValueError):
        run_sequence(single_stack(LSTM, 2, 2), np.zeros((0, 2)))


def test_stack_shape_validation():
    a = LstmParams.init(make_rng(0), 3, 4)
    b = LstmParams.init(make_rng(0), 5, 4)
    with pytest.raises(ShapeError):
        LayerStack([Layer(LSTM, a, a), Layer(LSTM, b)])
    LayerStack([Layer(LSTM, a, a), Layer(LSTM, LstmParams.init(make_rng(0), 8, 4))])


def test_deterministic_init():
    s1 = single_stack(LSTM, 3, 4, seed=9, layers=2, bidi=True).named_arrays("")
    s2 = single_stack(LSTM, 3, 4, seed=9, layers=2, bidi=True).named_arrays("")
    assert all(np.array_equal(s1[k], s2[k]) for k in s1)


def test_gate_layout():
    p = LstmParams.init(make_rng(0), 2, 3, forget_bias=1.0)
    assert p.W.shape == (2, 12) and p.U.shape == (3, 12)
    assert p.b[3:6].tolist() == [1.0] * 3 and not p.b[:3].any() and not p.b[6:].any()
    g = GruParams.init(make_rng(0), 2, 3)
    assert g.W.shape == (2, 9) and g.U.shape == (3, 9)
