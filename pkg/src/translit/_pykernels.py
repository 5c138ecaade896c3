"""Reference kernels in numpy and plain Python.

Used when the compiled ``_ckernels`` extension is unavailable, and as the
cross-check for it in the test suite.
"""
import numpy as np

NEG_INF = -np.inf


def ctc_alpha_beta(logp, ext):
    """Forward and backward CTC tables in log space.

    ``logp`` is ``(T, K)`` float64, ``ext`` the blank-interleaved label row of
    length ``S``. ``alpha[t, s]`` includes the emission at ``t``; ``beta[t, s]``
    covers frames after ``t`` only, so ``logsumexp(alpha[t] + beta[t])`` is the
    total log-likelihood for every ``t``.
    """
    logp = np.ascontiguousarray(logp, dtype=np.float64)
    ext = np.asarray(ext, dtype=np.int64)
    T = logp.shape[0]
    S = ext.shape[0]
    alpha = np.full((T, S), NEG_INF)
    beta = np.full((T, S), NEG_INF)
    # transitions that skip a blank: label differs from the one two back
    skip = np.zeros(S, dtype=bool)
    if S > 2:
        skip[2:] = (ext[2:] != 0) & (ext[2:] != ext[:-2])
    emit = logp[:, ext]
    alpha[0, 0] = emit[0, 0]
    if S > 1:
        alpha[0, 1] = emit[0, 1]
    with np.errstate(invalid="ignore"):
        for t in range(1, T):
            prev = alpha[t - 1]
            acc = prev.copy()
            acc[1:] = np.logaddexp(acc[1:], prev[:-1])
            acc[skip] = np.logaddexp(acc[skip], prev[:-2][skip[2:]])
            alpha[t] = acc + emit[t]
        beta[T - 1, S - 1] = 0.0
        if S > 1:
            beta[T - 1, S - 2] = 0.0
        skip_from = np.zeros(S, dtype=bool)
        skip_from[:-2] = skip[2:]
        for t in range(T - 2, -1, -1):
            nxt = beta[t + 1] + emit[t + 1]
            acc = nxt.copy()
            acc[:-1] = np.logaddexp(acc[:-1], nxt[1:])
            acc[skip_from] = np.logaddexp(acc[skip_from], nxt[2:][skip_from[:-2]])
            beta[t] = acc
    return alpha, beta


def levenshtein(a, b):
    """Unit-cost edit distance between two sequences."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]
