"""Exact and quadrature results when proportions are uniform on the simplex.

Conventions: ``covers`` is the number of parts ``N``; weights ``w[0] < ... <
w[N-1]``. The slice ``{p in simplex : A(p) = a}`` is parametrized by its first
``N - 2`` coordinates; the last two follow from the two linear constraints.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .compositions import appropriation, as_weights, sample_uniform_simplex, shannon_index
from .specfun import EULER_GAMMA, digamma

EPSABS = 1e-8


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


class EmptySliceError(ValueError):
    """The level set ``A = a`` does not meet the simplex."""


@dataclass(frozen=True)
class SliceBounds:
    """Feasible range of the next slice coordinate given a prefix."""

    lower: float
    upper: float

    @property
    def empty(self) -> bool:
        return self.lower > self.upper


def simplex_volume(covers: int) -> float:
    """Surface volume of the standard simplex with ``covers`` parts."""
    return math.sqrt(covers) / math.factorial(covers - 1)


def marginal_density_uniform(p, covers: int):
    """Density of a single coordinate, ``(N-1) (1-p)^(N-2)``."""
    if covers < 2:
        raise ValueError("covers must be >= 2")
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise ValueError("p must lie in [0, 1]")
    out = (covers - 1) * (1.0 - p) ** (covers - 2)
    return out if out.ndim else float(out)


def expected_shannon_uniform(covers: int) -> float:
    if covers < 2:
        raise ValueError("covers must be >= 2")
    return (digamma(float(covers)) + EULER_GAMMA - 1.0 + 1.0 / covers) / math.log(covers)


def expected_appropriation_uniform(w) -> float:
    return float(np.mean(np.asarray(as_weights(w))))


def _quad(func, lo, hi, points=(), epsabs=EPSABS, limit=200):
    inner = [p for p in points if lo < p < hi]
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, _ = integrate.quad(
                func, lo, hi, points=inner or None, epsabs=epsabs, epsrel=1e-10, limit=limit
            )
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(str(exc)) from exc
    return value


def appropriation_density_uniform(a: float, w, epsabs: float = EPSABS) -> float:
    """Density of ``A`` at ``a`` when the proportions are uniform.

    Integrates the constant density of the linearly transformed vector
    ``v = (sum s_i p_i, s_2 p_2, ..., s_n p_n)``, ``s_i = w_N - w_i``, over
    ``v_2..v_n`` with ``v_1 = w_N - a`` held fixed.
    """
    w = np.asarray(as_weights(w), dtype=float)
    if not w[0] < a < w[-1]:
        return 0.0
    n = w.size - 1
    s = w[-1] - w[:-1]
    v0 = w[-1] - a
    const = math.factorial(n) / float(np.prod(s))
    if n == 1:
        return const
    ratio = 1.0 / s - 1.0 / s[0]
    scale = np.empty(n)
    scale[1:] = s[0] * s[1:] / (s[0] - s[1:])

    def upper(k, sum_v, sum_r):
        return min(v0 - sum_v, scale[k] * (1.0 - v0 / s[0] - sum_r))

    def level(k, sum_v, sum_r):
        top = upper(k, sum_v, sum_r)
        if top <= 0:
            return 0.0
        if k == n - 1:
            return top
        nxt = k + 1
        # where the two branches of the next bound cross
        denom = 1.0 - scale[nxt] * ratio[k]
        points = []
        if denom != 0:
            points.append((v0 - sum_v - scale[nxt] * (1.0 - v0 / s[0] - sum_r)) / denom)
        return _quad(
            lambda v: level(nxt, sum_v + v, sum_r + v * ratio[k]),
            0.0,
            top,
            points=points,
            epsabs=epsabs,
        )

    return const * level(1, 0.0, 0.0)


def _bounds(k, a, w, P, Q):
    N = w.size
    rem = a - Q
    lower = max(0.0, (w[k + 1] * (1.0 - P) - rem) / (w[k + 1] - w[k]))
    upper = (w[-1] * (1.0 - P) - rem) / (w[-1] - w[k])
    if N - 1 == k + 1:
        upper = min(upper, 1.0 - P)
    return lower, upper


def _check_a(a, w):
    if not w[0] <= a <= w[-1]:
        raise EmptySliceError(f"a={a} outside [{w[0]}, {w[-1]}]")


def slice_bounds(a: float, w, prefix=()) -> SliceBounds:
    """Bounds for coordinate ``len(prefix)`` on the slice ``A = a``.

    ``lower > upper`` signals an infeasible prefix.
    """
    w = np.asarray(as_weights(w), dtype=float)
    _check_a(a, w)
    k = len(prefix)
    if k > w.size - 2:
        raise ValueError("prefix too long: the last coordinate is determined")
    prefix = np.asarray(prefix, dtype=float)
    lo, hi = _bounds(k, a, w, float(prefix.sum()), float(prefix @ w[:k]))
    return SliceBounds(float(lo), float(hi))


def slice_vertices(a: float, w) -> np.ndarray:
    """Vertices of the slice: its intersections with the simplex edges."""
    w = np.asarray(as_weights(w), dtype=float)
    _check_a(a, w)
    N = w.size
    verts = []
    for i in range(N):
        if w[i] == a:
            e = np.zeros(N)
            e[i] = 1.0
            verts.append(e)
        for j in range(i + 1, N):
            if w[i] < a < w[j]:
                v = np.zeros(N)
                v[i] = (w[j] - a) / (w[j] - w[i])
                v[j] = 1.0 - v[i]
                verts.append(v)
    return np.array(verts)


def _complete(prefix, a, w):
    """Append the two coordinates fixed by sum and appropriation constraints."""
    prefix = np.atleast_2d(prefix)
    k = prefix.shape[1]
    P = prefix.sum(axis=1)
    Q = prefix @ w[:k]
    second = (w[-1] * (1.0 - P) - (a - Q)) / (w[-1] - w[-2])
    last = 1.0 - P - second
    return np.column_stack([prefix, second, last])


def _xlogx(x):
    return x * math.log(x) if x > 0 else 0.0


def _segment_mean_xlogx(x0, x1):
    """Mean of ``x log x`` along a linear segment from ``x0`` to ``x1``."""
    x0 = max(x0, 0.0)
    x1 = max(x1, 0.0)
    dx = x1 - x0
    mid = 0.5 * (x0 + x1)
    if abs(dx) <= 1e-5 * mid:
        return _xlogx(mid) + dx * dx / (24.0 * mid)

    def F(x):
        return 0.25 * x * x * (2.0 * math.log(x) - 1.0) if x > 0 else 0.0

    return (F(x1) - F(x0)) / dx


def slice_integrals(a: float, w, index: Callable | None = None, epsabs: float = EPSABS):
    """Return ``(C_a, integral of index over the slice)``.

    ``C_a`` is the volume of the slice in the coordinates ``p_1..p_{N-2}``.
    ``index`` defaults to the Shannon index in base ``N``, whose innermost
    integral is done in closed form; a custom ``index`` maps a composition
    vector to a float and is integrated numerically at every level.
    """
    w = np.asarray(as_weights(w), dtype=float)
    _check_a(a, w)
    N = w.size
    if N == 1:
        raise ValueError("need at least two covers")
    if N == 2:
        point = _complete(np.empty((1, 0)), a, w)[0]
        val = shannon_index(point, 2) if index is None else index(point)
        return 1.0, float(val)
    log_base = math.log(N)
    last = N - 3

    def kink(k, P, Q):
        # next coordinate's lower bound leaves zero here
        return (w[k + 2] * (1.0 - P) - a + Q) / (w[k + 2] - w[k])

    def vol(k, P, Q):
        lo, hi = _bounds(k, a, w, P, Q)
        if hi <= lo:
            return 0.0
        if k == last:
            return hi - lo
        return _quad(lambda t: vol(k + 1, P + t, Q + w[k] * t), lo, hi, [kink(k, P, Q)], epsabs)

    def shannon(k, P, Q, E):
        lo, hi = _bounds(k, a, w, P, Q)
        if hi <= lo:
            return 0.0
        if k == last:
            lo_p = _tail(P, Q, lo, k)
            hi_p = _tail(P, Q, hi, k)
            total = E
            for x0, x1 in zip(lo_p, hi_p):
                total -= _segment_mean_xlogx(x0, x1)
            return (hi - lo) * total / log_base
        return _quad(
            lambda t: shannon(k + 1, P + t, Q + w[k] * t, E - _xlogx(t)),
            lo,
            hi,
            [kink(k, P, Q)],
            epsabs,
        )

    def _tail(P, Q, t, k):
        P2 = P + t
        Q2 = Q + w[k] * t
        second = (w[-1] * (1.0 - P2) - (a - Q2)) / (w[-1] - w[-2])
        return (t, second, 1.0 - P2 - second)

    def generic(k, prefix):
        P = sum(prefix)
        Q = float(np.dot(prefix, w[:k])) if k else 0.0
        lo, hi = _bounds(k, a, w, P, Q)
        if hi <= lo:
            return 0.0
        if k == last:
            return _quad(lambda t: float(index(_complete(np.array(prefix + [t]), a, w)[0])), lo, hi,
                         epsabs=epsabs)
        return _quad(lambda t: generic(k + 1, prefix + [t]), lo, hi, [kink(k, P, Q)], epsabs)

    volume = vol(0, 0.0, 0.0)
    if index is None:
        integral = shannon(0, 0.0, 0.0, 0.0)
    else:
        integral = generic(0, [])
    return volume, integral


def slice_volume(a: float, w, epsabs: float = EPSABS) -> float:
    return slice_integrals(a, w, index=lambda p: 0.0, epsabs=epsabs)[0]


def sample_uniform_slice(a: float, w, count: int, seed=None, batch: int = 65536) -> np.ndarray:
    """Uniform points on the slice ``A = a`` by rejection from its bounding box."""
    w = np.asarray(as_weights(w), dtype=float)
    _check_a(a, w)
    if count < 1:
        raise ValueError("count must be >= 1")
    verts = slice_vertices(a, w)
    if verts.size == 0:
        raise EmptySliceError(f"no composition has appropriation {a}")
    N = w.size
    if N == 1:
        return np.ones((count, 1))
    k = N - 2
    box_lo = verts[:, :k].min(axis=0)
    box_hi = verts[:, :k].max(axis=0)
    rng = np.random.default_rng(seed)
    out = []
    have = 0
    while have < count:
        prefix = box_lo + (box_hi - box_lo) * rng.random((batch, k))
        full = _complete(prefix, a, w)
        ok = (full[:, -2] >= -1e-12) & (full[:, -1] >= -1e-12)
        full = full[ok]
        full[:, -2:] = np.maximum(full[:, -2:], 0.0)
        out.append(full)
        have += len(full)
    return np.concatenate(out)[:count]


def conditional_expectation_uniform(
    a: float,
    w,
    method: str = "quadrature",
    index: Callable | None = None,
    count: int = 100_000,
    seed=None,
    epsabs: float = EPSABS,
) -> float:
    """Expected index value given ``A = a`` under uniform proportions.

    ``index`` defaults to the Shannon index with base ``N``. ``method`` is
    ``"quadrature"`` (nested adaptive integration over the slice) or
    ``"monte_carlo"`` (average over :func:`sample_uniform_slice`).
    """
    w = np.asarray(as_weights(w), dtype=float)
    if not w[0] < a < w[-1]:
        raise ValueError(f"a={a} must lie strictly inside ({w[0]}, {w[-1]})")
    if method == "quadrature":
        volume, integral = slice_integrals(a, w, index=index, epsabs=epsabs)
        if volume <= 0:
            raise EmptySliceError(f"slice at a={a} has zero volume")
        return integral / volume
    if method == "monte_carlo":
        pts = sample_uniform_slice(a, w, count, seed)
        vals = shannon_index(pts, w.size) if index is None else np.apply_along_axis(index, 1, pts)
        return float(np.mean(vals))
    raise ValueError(f"unknown method {method!r}")


def conditional_curve_uniform(grid, w, index: Callable | None = None, epsabs: float = EPSABS):
    """:func:`conditional_expectation_uniform` by quadrature over a grid of ``a``.

    Grid points on or outside the support endpoints give 0 for the default
    Shannon index (the slice is a single vertex).
    """
    w = np.asarray(as_weights(w), dtype=float)
    out = np.empty(len(grid))
    for i, a in enumerate(grid):
        if a <= w[0] or a >= w[-1]:
            if index is None:
                out[i] = 0.0
            else:
                out[i] = float(index(slice_vertices(min(max(a, w[0]), w[-1]), w)[0]))
        else:
            out[i] = conditional_expectation_uniform(a, w, index=index, epsabs=epsabs)
    return out


def appropriation_samples_uniform(w, count: int, seed=None) -> np.ndarray:
    """Appropriation of ``count`` uniform compositions."""
    w = as_weights(w)
    return appropriation(sample_uniform_simplex(len(w), count, seed), w)
