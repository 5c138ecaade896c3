import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import ctc_best_collapsed, ctc_path_sum
from translit.ctc import (InfeasibleTargetError, collapse, ctc_beam_decode, ctc_greedy_decode,
                          ctc_lattice, ctc_loss, insert_epsilons, min_frames)
from translit.numeric import grad_check, log_softmax, make_rng


def test_insert_epsilons_kyoto():
    assert insert_epsilons("きょうと", 2) == "__き__ょ__う__と__"


def test_insert_epsilons_small():
    assert insert_epsilons("", 3) == "___"
    assert insert_epsilons("ab", 1) == "_a_b_"
    assert insert_epsilons("ab", 0) == "ab"
    assert insert_epsilons([5, 6], 1, epsilon=0) == [0, 5, 0, 6, 0]
    with pytest.raises(ValueError):
        insert_epsilons("a", -1)


def test_collapse_examples():
    assert collapse("__ky_o_____to_") == "kyoto"
    assert collapse("aa_a") == "aa"
    assert collapse("____") == ""


@given(st.text(alphabet="ab_c", max_size=30), st.integers(1, 3))
def test_epsilon_round_trip(s, k):
    s = s.replace("_", "")
    assert collapse(insert_epsilons(s, k)) == s
    assert len(insert_epsilons(s, k)) == k * (len(s) + 1) + len(s)


def test_two_frame_uniform():
    lp = np.log(np.full((2, 2), 0.5))
    nll, _ = ctc_loss(lp, [1])
    # paths a_, _a, aa
    assert nll == pytest.approx(-math.log(3 / 4), abs=1e-14)


def test_infeasible_target():
    with pytest.raises(InfeasibleTargetError):
        ctc_loss(np.log(np.full((1, 3), 1 / 3)), [1, 2])
    with pytest.raises(InfeasibleTargetError):
        ctc_loss(np.log(np.full((2, 2), 0.5)), [1, 1])  # repeat needs a blank between
    assert min_frames([1, 1, 2]) == 4


def random_instance(r):
    T = int(r.integers(1, 7))
    V = int(r.integers(1, 4))
    lp = log_softmax(r.normal(size=(T, V + 1)) * 2)
    L = int(r.integers(0, 4))
    target = [int(x) for x in r.integers(1, V + 1, size=L)]
    return lp, target


def test_loss_matches_enumeration():
    r = make_rng(11)
    checked = 0
    while checked < 80:
        lp, target = random_instance(r)
        if min_frames(target) > len(lp):
            continue
        nll, _ = ctc_loss(lp, target)
        ref = ctc_path_sum(lp.tolist(), target)
        assert abs(nll - ref) <= 1e-10 * max(1.0, abs(ref))
        checked += 1


def test_forward_backward_consistency():
    r = make_rng(12)
    for _ in range(30):
        lp, target = random_instance(r)
        if min_frames(target) > len(lp):
            continue
        alpha, beta, logz = ctc_lattice(lp, target)
        assert alpha.shape == beta.shape == (len(lp), 2 * len(target) + 1)
        per_t = np.logaddexp.reduce(alpha + beta, axis=1)
        np.testing.assert_allclose(per_t, logz, atol=1e-9)


def test_loss_gradient():
    r = make_rng(13)
    for _ in range(20):
        lp, target = random_instance(r)
        if min_frames(target) > len(lp):
            continue
        _, g = ctc_loss(lp, target)
        assert grad_check(lambda x: ctc_loss(x, target)[0], lp.copy(), g) < 1e-4


def kyoto_frames(path, sharp=0.9):
    labels = {"_": 0, "k": 1, "y": 2, "o": 3, "t": 4}
    lp = np.full((len(path), 5), math.log((1 - sharp) / 4))
    for t, ch in enumerate(path):
        lp[t, labels[ch]] = math.log(sharp)
    return lp, {v: k for k, v in labels.items()}


def test_greedy_kyoto():
    lp, inv = kyoto_frames("__ky_o_____to_")
    assert "".join(inv[i] for i in ctc_greedy_decode(lp)) == "kyoto"


def test_greedy_blank_and_ties():
    assert ctc_greedy_decode(np.log(np.array([[0.9, 0.1], [0.8, 0.2]]))) == []
    assert ctc_greedy_decode(np.log(np.full((3, 2), 0.5))) == []


def test_beam_width_one_on_one_hot():
    soft, _ = kyoto_frames("__ky_o_____to_")
    lp = np.where(soft == soft.max(axis=1, keepdims=True), 0.0, -np.inf)
    assert ctc_beam_decode(lp, 1) == ctc_greedy_decode(lp)
    blank = np.full((4, 3), -np.inf)
    blank[:, 0] = 0.0
    assert ctc_beam_decode(blank, 1) == []


def test_beam_exhaustive():
    r = make_rng(14)
    for _ in range(40):
        T, V = int(r.integers(1, 5)), int(r.integers(1, 3))
        lp = log_softmax(r.normal(size=(T, V + 1)) * 1.5)
        assert ctc_beam_decode(lp, 10_000) == ctc_best_collapsed(lp.tolist())


def test_beam_width_zero():
    with pytest.raises(ValueError):
        ctc_beam_decode(np.zeros((1, 2)), 0)


def test_greedy_emits_in_frame_order():
    # decoded labels are the run heads of the argmax path, taken left to right
    r = make_rng(15)
    lp = log_softmax(r.normal(size=(20, 4)))
    path = lp.argmax(axis=1)
    heads = [int(path[t]) for t in range(20) if path[t] and (t == 0 or path[t] != path[t - 1])]
    assert ctc_greedy_decode(lp) == heads
