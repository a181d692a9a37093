"""Special functions used by the analytic results and the Dirichlet fitting.

Digamma and trigamma are evaluated by shifting the argument upward with the
recurrence relations and then summing the asymptotic expansion.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import factorial

import numpy as np

EULER_GAMMA = 0.57721566490153286060651209008240243

_SHIFT = 6.0

# B_{2k} for k = 1..8
_B2K = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
)


def _check_positive(x: np.ndarray) -> None:
    if np.any(~(x > 0)):
        raise ValueError("argument must be positive")


def digamma(x):
    """Logarithmic derivative of the gamma function for positive arguments.

    Accurate to a few units of 1e-14 on ``x >= 1``.
    """
    x = np.asarray(x, dtype=float)
    _check_positive(x)
    x = x.copy()
    acc = np.zeros_like(x)
    while True:
        small = x < _SHIFT
        if not np.any(small):
            break
        acc = np.where(small, acc - 1.0 / x, acc)
        x = np.where(small, x + 1.0, x)
    inv2 = 1.0 / (x * x)
    series = np.zeros_like(x)
    power = inv2
    for k, b in enumerate(_B2K, start=1):
        series = series + b / (2 * k) * power
        power = power * inv2
    out = acc + np.log(x) - 0.5 / x - series
    return out if out.ndim else float(out)


def trigamma(x):
    """Derivative of :func:`digamma`."""
    x = np.asarray(x, dtype=float)
    _check_positive(x)
    x = x.copy()
    acc = np.zeros_like(x)
    while True:
        small = x < _SHIFT
        if not np.any(small):
            break
        acc = np.where(small, acc + 1.0 / (x * x), acc)
        x = np.where(small, x + 1.0, x)
    inv = 1.0 / x
    inv2 = inv * inv
    series = np.zeros_like(x)
    power = inv2 * inv
    for b in _B2K:
        series = series + b * power
        power = power * inv2
    out = acc + inv + 0.5 * inv2 + series
    return out if out.ndim else float(out)


def inverse_digamma(y, tol: float = 1e-14, max_iter: int = 50):
    """Solve ``digamma(x) = y`` for ``x > 0`` by Newton iteration."""
    y = np.asarray(y, dtype=float)
    # usual two-branch starting point: exp for large y, -1/(y + gamma) for small
    x = np.where(y >= -2.22, np.exp(y) + 0.5, -1.0 / (y - digamma(1.0)))
    for _ in range(max_iter):
        step = (digamma(x) - y) / trigamma(x)
        x_new = x - step
        x_new = np.where(x_new <= 0, x / 2.0, x_new)
        if np.all(np.abs(x_new - x) <= tol * np.maximum(1.0, np.abs(x))):
            x = x_new
            break
        x = x_new
    return x if x.ndim else float(x)


@lru_cache(maxsize=None)
def bernoulli_numbers(count: int) -> tuple[Fraction, ...]:
    """Exact Bernoulli numbers ``B_0 .. B_{count-1}`` (convention ``B_1 = -1/2``).

    Uses ``B_r = -sum_{k<r} r! B_k / (k! (r+1-k)!)``.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    out = [Fraction(1)]
    for r in range(1, count):
        total = Fraction(0)
        for k in range(r):
            total += Fraction(factorial(r), factorial(k) * factorial(r + 1 - k)) * out[k]
        out.append(-total)
    return tuple(out)
