"""Dense numeric primitives used by every model in the package.

Tensors are plain ``numpy.ndarray`` values in row-major (C) order. Float64 is
the reference dtype; float32 is accepted for training when a model is built
with ``dtype=np.float32``.

Randomness always comes from :func:`make_rng`, a ``numpy`` ``Generator`` on
the PCG64 bit generator. PCG64's output stream is specified independently of
platform, so a seed fixes initial weights everywhere.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

Tensor2D = np.ndarray


class ShapeError(ValueError):
    """Operand shapes are incompatible."""


class NumericError(ArithmeticError):
    """A computation produced a non-finite value."""


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def matmul(a: Tensor2D, b: Tensor2D) -> Tensor2D:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def softmax(logits, axis: int = -1) -> np.ndarray:
    x = np.asarray(logits)
    if x.size == 0:
        raise ValueError("softmax of an empty sequence")
    if not np.issubdtype(x.dtype, np.floating):
        x = x.astype(np.float64)
    e = np.exp(x - x.max(axis=axis, keepdims=True))
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax(logits, axis: int = -1) -> np.ndarray:
    x = np.asarray(logits)
    if x.size == 0:
        raise ValueError("log_softmax of an empty sequence")
    shifted = x - x.max(axis=axis, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))


def logsumexp(x, axis=None):
    x = np.asarray(x)
    m = np.max(x, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    out = np.log(np.sum(np.exp(x - m), axis=axis, keepdims=True)) + m
    return np.squeeze(out, axis=axis) if axis is not None else out.reshape(())[()]


def sigmoid(x):
    # tanh form never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def uniform_init(rng: np.random.Generator, shape, fan_in: int, dtype=np.float64) -> np.ndarray:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation."""
    s = 1.0 / np.sqrt(max(fan_in, 1))
    return rng.uniform(-s, s, size=shape).astype(dtype)


def grad_check(
    f: Callable[[np.ndarray], float],
    x: np.ndarray,
    analytic_grad: np.ndarray,
    h: float = 1e-5,
) -> float:
    """Compare ``analytic_grad`` with central differences of ``f`` at ``x``.

    Returns the largest ``|analytic - numeric| / max(1, |analytic|, |numeric|)``
    over all coordinates. ``x`` is restored before returning.
    """
    x = np.asarray(x, dtype=np.float64)
    analytic = np.asarray(analytic_grad, dtype=np.float64).reshape(x.shape)
    flat = x.reshape(-1)
    worst = 0.0
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = float(f(x))
        flat[i] = orig - h
        fm = float(f(x))
        flat[i] = orig
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise NumericError(f"non-finite objective while perturbing coordinate {i}")
        numeric = (fp - fm) / (2.0 * h)
        a = analytic.reshape(-1)[i]
        err = abs(a - numeric) / max(1.0, abs(a), abs(numeric))
        worst = max(worst, err)
    return worst


def grad_check_params(
    loss: Callable[[], float],
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    h: float = 1e-5,
    max_coords: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """Run :func:`grad_check` over every array in a parameter dict.

    ``loss`` is a closure that reads the arrays in ``params`` in place. With
    ``max_coords`` only a random subset of coordinates per array is probed.
    """
    worst = 0.0
    for name, p in params.items():
        flat = p.reshape(-1)
        g = grads[name].reshape(-1)
        idx = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            idx = (rng or make_rng(0)).choice(flat.size, size=max_coords, replace=False)
        for i in idx:
            orig = flat[i]

            def f(v, i=i):
                flat[i] = v[0]
                return loss()

            try:
                err = grad_check(f, np.array([orig]), np.array([g[i]]), h=h)
            finally:
                flat[i] = orig
            if err > worst:
                worst = err
    return worst
