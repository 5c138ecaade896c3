# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled CTC lattice and edit-distance kernels."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log1p, INFINITY

cnp.import_array()


cdef inline double logadd(double a, double b) nogil:
    if a == -INFINITY:
        return b
    if b == -INFINITY:
        return a
    if a > b:
        return a + log1p(exp(b - a))
    return b + log1p(exp(a - b))


def ctc_alpha_beta(logp, ext):
    cdef double[:, ::1] lp = np.ascontiguousarray(logp, dtype=np.float64)
    cdef long long[::1] e = np.ascontiguousarray(ext, dtype=np.int64)
    cdef Py_ssize_t T = lp.shape[0], S = e.shape[0], t, s
    alpha_arr = np.full((T, S), -np.inf)
    beta_arr = np.full((T, S), -np.inf)
    cdef double[:, ::1] alpha = alpha_arr
    cdef double[:, ::1] beta = beta_arr
    cdef double acc
    with nogil:
        alpha[0, 0] = lp[0, e[0]]
        if S > 1:
            alpha[0, 1] = lp[0, e[1]]
        for t in range(1, T):
            for s in range(S):
                acc = alpha[t - 1, s]
                if s >= 1:
                    acc = logadd(acc, alpha[t - 1, s - 1])
                if s >= 2 and e[s] != 0 and e[s] != e[s - 2]:
                    acc = logadd(acc, alpha[t - 1, s - 2])
                if acc != -INFINITY:
                    acc = acc + lp[t, e[s]]
                alpha[t, s] = acc
        beta[T - 1, S - 1] = 0.0
        if S > 1:
            beta[T - 1, S - 2] = 0.0
        for t in range(T - 2, -1, -1):
            for s in range(S):
                acc = beta[t + 1, s] + lp[t + 1, e[s]]
                if s + 1 < S:
                    acc = logadd(acc, beta[t + 1, s + 1] + lp[t + 1, e[s + 1]])
                if s + 2 < S and e[s + 2] != 0 and e[s + 2] != e[s]:
                    acc = logadd(acc, beta[t + 1, s + 2] + lp[t + 1, e[s + 2]])
                beta[t, s] = acc
    return alpha_arr, beta_arr


def levenshtein(a, b):
    cdef long long[::1] x = np.ascontiguousarray(_codes(a), dtype=np.int64)
    cdef long long[::1] y = np.ascontiguousarray(_codes(b), dtype=np.int64)
    if x.shape[0] < y.shape[0]:
        x, y = y, x
    cdef Py_ssize_t n = x.shape[0], m = y.shape[0], i, j
    row_arr = np.arange(m + 1, dtype=np.int64)
    cdef long long[::1] row = row_arr
    cdef long long diag, up, best
    with nogil:
        for i in range(1, n + 1):
            diag = row[0]
            row[0] = i
            for j in range(1, m + 1):
                up = row[j]
                best = diag + (x[i - 1] != y[j - 1])
                if up + 1 < best:
                    best = up + 1
                if row[j - 1] + 1 < best:
                    best = row[j - 1] + 1
                row[j] = best
                diag = up
    return int(row[m])


def _codes(seq):
    if isinstance(seq, str):
        return np.fromiter(map(ord, seq), dtype=np.int64, count=len(seq))
    if isinstance(seq, np.ndarray):
        return seq
    return np.fromiter((hash(c) if not isinstance(c, int) else c for c in seq),
                       dtype=np.int64, count=len(seq))
