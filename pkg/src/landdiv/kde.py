"""Dirichlet-kernel density estimation on a simplex.

A sample ``z_1..z_N`` with bandwidth ``lam`` gives the estimate

    f(x) = 1/N sum_i Gamma(n + 1/lam) / prod_j Gamma(1 + z_ij/lam) prod_j x_j^(z_ij/lam)

(density on the first ``n - 1`` coordinates). Two evaluation paths are
provided. ``eval_loggamma`` works in log space with ``scipy.special.gammaln``.
``eval_euler_maclaurin`` rewrites the gamma ratio with Weierstrass' product,
sums the resulting series exactly up to ``m - 1`` and closes it with an
Euler-Maclaurin tail whose remainder is bounded so that the ratio of the two
paths stays within ``1 + eta``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np
from scipy.special import gammaln, logsumexp

from .compositions import as_compositions
from .specfun import EULER_GAMMA, bernoulli_numbers

FORMAT = "landdiv.kde"
VERSION = 1
DEFAULT_ETA = 1e-4
_CHUNK = 2_000_000


class PlanError(RuntimeError):
    """No truncation point meets the requested relative error."""


@dataclass(frozen=True)
class EulerMaclaurinPlan:
    """Truncation of the Weierstrass series for one model.

    ``bound`` is the largest remainder bound over all sample coordinates and
    never exceeds ``epsilon``. ``sign_condition`` records whether the
    derivative sign condition was observed on the whole check grid for every
    coordinate; where it was not, the bound falls back to a total-variation
    estimate that does not need it.
    """

    m: int
    s: int
    bernoulli: tuple[Fraction, ...]
    epsilon: float
    bound: float
    sign_condition: bool
    tail_vanishes: bool = True


def g_term(k, z, u, n):
    """Summand of the log gamma-ratio series at ``k`` for coordinate ``z``.

    ``u = 1/lam``; ``n`` is the number of parts.
    """
    k = np.asarray(k, dtype=float)
    c = 1.0 / n - z
    return c * u / k + np.log1p(z * u / k) - np.log1p(u / k) / n


def _antiderivative_parts(x, z, u, n):
    # G(x) - G(inf) with the divergent logarithms already cancelled
    c = 1.0 / n - z
    return c * u + (x + z * u) * np.log1p(z * u / x) - (x + u) * np.log1p(u / x) / n


def g_integral(a, b, z, u, n):
    """Closed form of the integral of :func:`g_term` over ``[a, b]`` (``b`` may be inf)."""
    upper = 0.0 if np.isinf(b) else _antiderivative_parts(b, z, u, n)
    return upper - _antiderivative_parts(a, z, u, n)


_SERIES_T = 0.05
_SERIES_TERMS = 32


def _h(r, t, z, n):
    """Bracket of ``g^(r)(x) = (-1)^(r-1) (r-1)! x^-r h_r(u/x)``.

    Small ``t`` uses the power series in ``t``, whose linear term cancels.
    """
    t, z = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(z, dtype=float))
    c = 1.0 / n - z
    out = np.array(np.expm1(-r * np.log1p(z * t)) - np.expm1(-r * np.log1p(t)) / n - c * r * t)
    small = t < _SERIES_T
    if np.any(small):
        ts = t[small]
        zs = z[small]
        series = np.zeros_like(ts)
        tk = ts * ts
        zk = zs * zs
        for k in range(2, _SERIES_TERMS):
            series += (-1) ** k * math.comb(r + k - 1, k) * (zk - 1.0 / n) * tk
            tk = tk * ts
            zk = zk * zs
        out[small] = series
    return out


def g_derivative(r: int, x, z, u, n):
    """``r``-th derivative (``r >= 1``) of :func:`g_term` with respect to ``k``."""
    x = np.asarray(x, dtype=float)
    sign = -1.0 if (r - 1) % 2 else 1.0
    return sign * math.factorial(r - 1) * x ** (-r) * _h(r, u / x, z, n)


def _check_grid(u: float, max_m: int) -> np.ndarray:
    # beyond x = 1e4 u the leading t^2 term fixes every sign (see _bounds_for_s)
    head = np.arange(1, max_m + 1, dtype=float)
    tail = np.geomspace(max_m, max(1e4 * u, 10.0 * max_m), 300)[1:]
    return np.concatenate([head, tail])


def _bounds_for_s(s: int, zs: np.ndarray, u: float, n: int, grid: np.ndarray, chunk: int = 1000):
    """Per grid start point: worst remainder bound and sign-condition flag.

    On ``[x, inf)`` the remainder is bounded by ``|B_{2s+2}|/(2s+2)! |g^(2s+1)(x)|``
    when ``g^(2s+2) g^(2s+4) > 0`` there; otherwise by the total variation of
    ``g^(2s+1)`` times ``(2 - 2^-(2s+1)) |B_{2s+2}|/(2s+2)!``. Past the grid
    both even derivatives share the sign of ``z^2 - 1/n`` times a positive
    factor, so the condition can only fail on the grid.
    """
    coef = abs(float(bernoulli_numbers(2 * s + 3)[2 * s + 2])) / math.factorial(2 * s + 2)
    worst = np.zeros(len(grid))
    holds_all = np.ones(len(grid), dtype=bool)
    for start in range(0, len(zs), chunk):
        Z = zs[start:start + chunk, None]
        d1 = g_derivative(2 * s + 1, grid[None, :], Z, u, n)
        d2 = g_derivative(2 * s + 2, grid[None, :], Z, u, n)
        d4 = g_derivative(2 * s + 4, grid[None, :], Z, u, n)
        good = (d2 * d4) > 0
        holds = np.flip(np.logical_and.accumulate(np.flip(good, axis=1), axis=1), axis=1)
        steps = np.abs(np.diff(d1, axis=1))
        tv = np.flip(np.cumsum(np.flip(steps, axis=1), axis=1), axis=1)
        tv = np.concatenate([tv, np.zeros((len(Z), 1))], axis=1) + np.abs(d1[:, -1:])
        classic = coef * np.abs(d1)
        fallback = coef * (2.0 - 2.0 ** (-(2 * s + 1))) * tv
        bound = np.where(holds, classic, np.maximum(classic, fallback))
        worst = np.maximum(worst, bound.max(axis=0))
        holds_all &= holds.all(axis=0)
    return worst, holds_all


def _plan(zs: np.ndarray, lam: float, n: int, eta: float, max_m: int = 100, max_s: int = 3):
    u = 1.0 / lam
    eps = math.log1p(eta) / n
    grid = _check_grid(u, max_m)
    per_s = {s: _bounds_for_s(s, zs, u, n, grid) for s in range(1, max_s + 1)}
    for m in range(1, max_m + 1):
        j = m - 1
        for s in range(1, max_s + 1):
            bound, holds = per_s[s]
            if bound[j] <= eps:
                return EulerMaclaurinPlan(
                    m=m,
                    s=s,
                    bernoulli=bernoulli_numbers(2 * s + 3),
                    epsilon=eps,
                    bound=float(bound[j]),
                    sign_condition=bool(holds[j]),
                )
    raise PlanError(f"no (m, s) with m <= {max_m}, s <= {max_s} reaches eta={eta}")


def remainder_bound(plan: EulerMaclaurinPlan, zs, lam: float, n: int) -> float:
    """Recompute the worst remainder bound of ``plan`` for coordinates ``zs``."""
    u = 1.0 / lam
    grid = _check_grid(u, 100)
    grid = np.concatenate([[float(plan.m)], grid[grid > plan.m]])
    bound, _ = _bounds_for_s(plan.s, np.unique(np.asarray(zs, dtype=float)), u, n, grid)
    return float(bound[0])


def series_tail(m: int, s: int, z, u, n):
    """Euler-Maclaurin value of ``sum_{k >= m} g(k)`` without the remainder."""
    bern = bernoulli_numbers(2 * s + 1)
    out = g_integral(m, np.inf, z, u, n) + 0.5 * g_term(m, z, u, n)
    for r in range(1, s + 1):
        out = out - float(bern[2 * r]) / math.factorial(2 * r) * g_derivative(2 * r - 1, m, z, u, n)
    return out


def log_ratio_euler_maclaurin(z, lam: float, plan: EulerMaclaurinPlan) -> np.ndarray:
    """Approximate ``log Gamma(n + 1/lam) - sum_j log Gamma(1 + z_j/lam)`` per row of ``z``."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    n = z.shape[1]
    u = 1.0 / lam
    log_c = float(np.sum(np.log(n - np.arange(1, n) + u)))
    head = np.zeros_like(z)
    for k in range(1, plan.m):
        head += g_term(k, z, u, n)
    per_coord = -EULER_GAMMA * u * (1.0 / n - z) + head + series_tail(plan.m, plan.s, z, u, n)
    return log_c + per_coord.sum(axis=1)


def log_ratio_loggamma(z, lam: float) -> np.ndarray:
    z = np.atleast_2d(np.asarray(z, dtype=float))
    n = z.shape[1]
    return gammaln(n + 1.0 / lam) - gammaln(1.0 + z / lam).sum(axis=1)


@dataclass(frozen=True, eq=False)
class KdeModel:
    """Dirichlet-kernel estimate built on sample ``points`` with bandwidth ``lam``."""

    points: np.ndarray
    lam: float
    eta: float = DEFAULT_ETA
    _plan_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @cached_property
    def scaled(self) -> np.ndarray:
        return self.points / self.lam

    @cached_property
    def log_normalizers(self) -> np.ndarray:
        return log_ratio_loggamma(self.points, self.lam)

    @property
    def plan(self) -> EulerMaclaurinPlan:
        if "plan" not in self._plan_cache:
            self._plan_cache["plan"] = plan_euler_maclaurin(self)
        return self._plan_cache["plan"]

    def em_log_normalizers(self, plan: EulerMaclaurinPlan | None = None) -> np.ndarray:
        plan = plan or self.plan
        key = ("em", plan.m, plan.s)
        if key not in self._plan_cache:
            self._plan_cache[key] = log_ratio_euler_maclaurin(self.points, self.lam, plan)
        return self._plan_cache[key]

    def _evaluate(self, x, log_norm, log: bool = False) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        if x.shape[1] != self.dim:
            raise ValueError(f"expected {self.dim} parts, got {x.shape[1]}")
        if np.any(x < 0) or np.any(np.abs(x.sum(axis=1) - 1.0) > 1e-6):
            raise ValueError("evaluation point is not a composition")
        zero = x <= 0
        with np.errstate(divide="ignore"):
            logx = np.where(zero, 0.0, np.log(np.where(zero, 1.0, x)))
        positive = (self.points > 0).astype(float)
        rows = max(1, _CHUNK // max(1, self.size))
        out = np.empty(len(x))
        for start in range(0, len(x), rows):
            sl = slice(start, start + rows)
            expo = logx[sl] @ self.scaled.T + log_norm
            if zero[sl].any():
                killed = (zero[sl].astype(float) @ positive.T) > 0
                expo[killed] = -np.inf
            top = expo.max(axis=1)
            shift = np.where(np.isfinite(top), top, 0.0)
            with np.errstate(divide="ignore"):
                out[sl] = np.log(np.exp(expo - shift[:, None]).sum(axis=1)) + shift
        out -= math.log(self.size)
        if not log:
            out = np.exp(out)
        return out[0] if single else out

    def to_json(self) -> str:
        doc = {
            "format": FORMAT,
            "version": VERSION,
            "dim": self.dim,
            "lambda": self.lam,
            "eta": self.eta,
            "points": self.points.tolist(),
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "KdeModel":
        doc = json.loads(text)
        if doc.get("format") != FORMAT or doc.get("version") != VERSION:
            raise ValueError("not a version-1 KDE document")
        model = build(doc["points"], doc["lambda"], doc["eta"], renormalize=False)
        if model.dim != doc["dim"]:
            raise ValueError("dimension field does not match points")
        return model


def build(points, lam: float, eta: float = DEFAULT_ETA, renormalize: bool = True) -> KdeModel:
    """Validate the sample and wrap it in a :class:`KdeModel`.

    With ``renormalize=False`` the points are checked but stored as given,
    which keeps reloaded models bit-identical.
    """
    checked = as_compositions(points)
    pts = checked if renormalize else np.array(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise ValueError("empty sample")
    if pts.shape[1] < 2:
        raise ValueError("a kernel estimate needs at least two parts")
    if not lam > 0:
        raise ValueError("bandwidth must be positive")
    if not eta > 0:
        raise ValueError("eta must be positive")
    pts.setflags(write=False)
    return KdeModel(pts, float(lam), float(eta))


def eval_loggamma(model: KdeModel, x, log: bool = False):
    """Reference evaluation with log-gamma normalizers.

    ``log=True`` returns the log density, which stays finite where the
    density itself underflows.
    """
    return model._evaluate(x, model.log_normalizers, log)


def plan_euler_maclaurin(model: KdeModel, max_m: int = 100, max_s: int = 3) -> EulerMaclaurinPlan:
    """Smallest truncation ``(m, s)`` meeting the model's relative error target."""
    zs = np.unique(model.points)
    return _plan(zs, model.lam, model.dim, model.eta, max_m=max_m, max_s=max_s)


def eval_euler_maclaurin(model: KdeModel, plan: EulerMaclaurinPlan | None = None, x=None, log: bool = False):
    """Evaluation through the truncated Weierstrass series.

    Within a factor ``1 + eta`` of :func:`eval_loggamma`.
    """
    if x is None:
        raise TypeError("evaluation point required")
    return model._evaluate(x, model.em_log_normalizers(plan), log)


def evaluate(model: KdeModel, x, path: str = "euler_maclaurin", log: bool = False):
    if path == "euler_maclaurin":
        return eval_euler_maclaurin(model, None, x, log)
    if path == "loggamma":
        return eval_loggamma(model, x, log)
    raise ValueError(f"unknown evaluation path {path!r}")


def pseudo_log_likelihood(points, lam: float) -> float:
    """Leave-one-out log-likelihood of the kernel estimate (diagnostic only)."""
    pts = as_compositions(points)
    N = len(pts)
    if N < 2:
        raise ValueError("need at least two points")
    scaled = pts / lam
    log_norm = log_ratio_loggamma(pts, lam)
    with np.errstate(divide="ignore"):
        logx = np.log(pts)
    expo = logx @ scaled.T + log_norm[None, :]
    np.fill_diagonal(expo, -np.inf)
    return float(np.sum(logsumexp(expo, axis=1) - math.log(N - 1)))
