"""Epsilon insertion, CTC loss and CTC decoding.

Frame tables are ``(T, V + 1)`` arrays of log-probabilities whose column 0 is
the epsilon/blank label and columns ``1..V`` the content labels. String-level
helpers work on any sequence and treat :data:`EPSILON` (``"_"``) as blank.
"""
from __future__ import annotations

from collections import defaultdict

import numpy as np

from . import kernels

EPSILON = "_"
BLANK = 0


class InfeasibleTargetError(ValueError):
    """The target cannot be emitted in the available number of frames."""


def insert_epsilons(source, k: int, epsilon=EPSILON):
    """Put ``k`` epsilons before every symbol and ``k`` after the last one.

    Strings give strings back; other sequences give lists.

    >>> insert_epsilons("ab", 1)
    '_a_b_'
    """
    if k < 0:
        raise ValueError("epsilon count must be >= 0")
    pad = [epsilon] * k
    out = list(pad)
    for sym in source:
        out.append(sym)
        out.extend(pad)
    if isinstance(source, str) and isinstance(epsilon, str):
        return "".join(out)
    return out


def collapse(path, blank=EPSILON):
    """Merge adjacent repeats, then drop blanks."""
    out = []
    prev = None
    for sym in path:
        if sym != prev and sym != blank:
            out.append(sym)
        prev = sym
    if isinstance(path, str):
        return "".join(out)
    return out


def min_frames(target) -> int:
    """Frames needed to emit ``target``: one per label plus a blank between repeats."""
    target = list(target)
    return len(target) + sum(a == b for a, b in zip(target, target[1:]))


def _extended(target) -> np.ndarray:
    ext = np.zeros(2 * len(target) + 1, dtype=np.int64)
    ext[1::2] = target
    return ext


def ctc_lattice(frame_logprobs, target):
    """Return ``(alpha, beta, log_likelihood)`` for ``target`` under the frames."""
    lp = np.asarray(frame_logprobs, dtype=np.float64)
    target = [int(t) for t in target]
    if lp.ndim != 2 or lp.shape[0] < 1:
        raise ValueError("frame table must be (T, V+1) with T >= 1")
    if any(t <= BLANK or t >= lp.shape[1] for t in target):
        raise ValueError(f"target labels must lie in 1..{lp.shape[1] - 1}")
    need = min_frames(target)
    if lp.shape[0] < need:
        raise InfeasibleTargetError(
            f"target of length {len(target)} needs {need} frames, got {lp.shape[0]}")
    ext = _extended(target)
    alpha, beta = kernels.ctc_alpha_beta(lp, ext)
    last = alpha[-1, -2:] if len(ext) > 1 else alpha[-1, -1:]
    return alpha, beta, float(np.logaddexp.reduce(last))


def ctc_loss(frame_logprobs, target):
    """Negative log-likelihood of ``target`` and its gradient wrt the frames.

    The gradient treats every entry of ``frame_logprobs`` as an independent
    input: ``d nll / d lp[t, k]`` is minus the posterior occupancy of label
    ``k`` at frame ``t``.
    """
    lp = np.asarray(frame_logprobs, dtype=np.float64)
    alpha, beta, logz = ctc_lattice(lp, target)
    if not np.isfinite(logz):
        raise InfeasibleTargetError("target has zero probability under the frames")
    ext = _extended([int(t) for t in target])
    occ = np.exp(alpha + beta - logz)
    grad = np.zeros_like(lp)
    np.add.at(grad.T, ext, -occ.T)
    return -logz, grad


def ctc_greedy_decode(frame_logprobs) -> list[int]:
    """Per-frame argmax (lowest label on ties) followed by collapse."""
    lp = np.asarray(frame_logprobs)
    return collapse([int(k) for k in lp.argmax(axis=1)], blank=BLANK)


def ctc_beam_decode(frame_logprobs, width: int) -> list[int]:
    """Prefix beam search over collapsed label strings.

    Each prefix tracks the probability of paths ending in blank and in its
    last label; paths that collapse to the same prefix are summed.
    """
    if width < 1:
        raise ValueError("beam width must be >= 1")
    lp = np.asarray(frame_logprobs, dtype=np.float64)
    T, K = lp.shape
    neg = -np.inf
    # prefix -> (log p ending in blank, log p ending in last label)
    beams = {(): (0.0, neg)}
    for t in range(T):
        nxt = defaultdict(lambda: [neg, neg])
        row = lp[t]
        for prefix, (pb, pnb) in beams.items():
            total = np.logaddexp(pb, pnb)
            entry = nxt[prefix]
            entry[0] = np.logaddexp(entry[0], total + row[BLANK])
            last = prefix[-1] if prefix else None
            if last is not None:
                entry[1] = np.logaddexp(entry[1], pnb + row[last])
            for k in range(1, K):
                ext = prefix + (k,)
                e = nxt[ext]
                # repeating the last label needs a blank in between
                src = pb if k == last else total
                e[1] = np.logaddexp(e[1], src + row[k])
        ranked = sorted(nxt.items(), key=lambda kv: (-np.logaddexp(*kv[1]), kv[0]))
        beams = {p: tuple(v) for p, v in ranked[:width]}
    best = min(beams.items(), key=lambda kv: (-np.logaddexp(*kv[1]), kv[0]))
    return list(best[0])
