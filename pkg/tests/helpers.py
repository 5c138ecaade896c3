"""Random tiny models and batches shared by unit and acceptance tests."""
import numpy as np

from translit.dataset import EOS_ID, NUM_RESERVED, build_vocab
from translit.ei import EpsilonModel
from translit.numeric import grad_check_params
from translit.seq2seq import Seq2SeqModel


def tiny_vocabs(n_src=3, n_tgt=3):
    return build_vocab(["abcdef"[:n_src]]), build_vocab(["uvwxyz"[:n_tgt]])


def random_config(r, family):
    cfg = dict(cell=str(r.choice(["lstm", "gru"])), layers=int(r.integers(1, 3)),
               hidden=int(r.integers(2, 5)), bidirectional=bool(r.integers(2)))
    if family == "ei":
        cfg["epsilons"] = int(r.integers(1, 3))
    return cfg


def random_model(r, family, **overrides):
    sv, tv = tiny_vocabs(int(r.integers(2, 4)), int(r.integers(1, 4)))
    cfg = {**random_config(r, family), **overrides}
    cls = EpsilonModel if family == "ei" else Seq2SeqModel
    return cls(cfg, sv, tv, seed=int(r.integers(2**31)))


def random_batch(r, model, max_len=4, eos=True):
    B = int(r.integers(1, 4))
    ns, nt = len(model.src_vocab), len(model.tgt_vocab)
    src = [list(r.integers(NUM_RESERVED, ns, size=int(r.integers(1, max_len + 1))))
           for _ in range(B)]
    tgt = [list(r.integers(NUM_RESERVED, nt, size=int(r.integers(0 if eos else 1, max_len))))
           + ([EOS_ID] if eos else []) for _ in range(B)]
    return [[int(x) for x in s] for s in src], [[int(x) for x in t] for t in tgt]


def model_grad_error(model, sources, targets, r, max_coords=4):
    _, grads, _ = model.loss_and_grads(sources, targets)
    return grad_check_params(lambda: model.loss_and_grads(sources, targets)[0],
                             model.params, grads, h=1e-5, max_coords=max_coords, rng=r)
