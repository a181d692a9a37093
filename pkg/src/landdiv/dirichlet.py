"""Dirichlet law: density, sampling and maximum-likelihood fit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .specfun import digamma, inverse_digamma

CLAMP = 1e-10


class DirichletFitError(RuntimeError):
    pass


@dataclass(frozen=True)
class DirichletParams:
    alpha: tuple[float, ...]

    def __post_init__(self):
        alpha = tuple(float(a) for a in self.alpha)
        if len(alpha) < 2:
            raise ValueError("a Dirichlet law needs at least two parameters")
        if not all(np.isfinite(alpha)) or min(alpha) <= 0:
            raise ValueError("Dirichlet parameters must be positive")
        object.__setattr__(self, "alpha", alpha)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.alpha, dtype=dtype)

    @property
    def mean(self) -> np.ndarray:
        a = np.asarray(self.alpha)
        return a / a.sum()

    def log_normalizer(self) -> float:
        """``log B(alpha)``."""
        a = np.asarray(self.alpha)
        return float(gammaln(a).sum() - gammaln(a.sum()))


def _params(params) -> DirichletParams:
    return params if isinstance(params, DirichletParams) else DirichletParams(tuple(params))


def log_density(params, x):
    """Log density with respect to Lebesgue measure on the first ``n-1`` coordinates.

    Points on the boundary give ``-inf`` when the matching ``alpha_j > 1``
    and raise when ``alpha_j < 1`` (the density is unbounded there).
    """
    params = _params(params)
    a = np.asarray(params.alpha)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != a.size:
        raise ValueError("dimension mismatch")
    zero = x <= 0
    if np.any(zero & (a < 1)):
        raise ValueError("density is unbounded at this boundary point")
    with np.errstate(divide="ignore"):
        logs = np.where(zero, 0.0, np.log(np.where(zero, 1.0, x)))
    terms = (a - 1.0) * logs
    terms = np.where(zero & (a > 1), -np.inf, terms)
    out = terms.sum(axis=-1) - params.log_normalizer()
    return out if np.ndim(out) else float(out)


def sample(params, count: int, seed=None) -> np.ndarray:
    """Normalized independent gamma variates, shape ``(count, n)``."""
    params = _params(params)
    rng = np.random.default_rng(seed)
    g = rng.standard_gamma(np.asarray(params.alpha), size=(count, len(params.alpha)))
    return g / g.sum(axis=1, keepdims=True)


def log_likelihood(params, points) -> float:
    """Total log-likelihood of interior points."""
    return float(np.sum(log_density(params, _clamped(points))))


def _clamped(points) -> np.ndarray:
    x = np.maximum(np.asarray(points, dtype=float), CLAMP)
    return x / x.sum(axis=-1, keepdims=True)


def _moment_start(x: np.ndarray) -> np.ndarray:
    mean = x.mean(axis=0)
    second = (x[:, 0] ** 2).mean()
    denom = second - mean[0] ** 2
    if denom <= 0:
        raise DirichletFitError("degenerate sample: no spread")
    precision = (mean[0] - second) / denom
    if not np.isfinite(precision) or precision <= 0:
        precision = 1.0
    return mean * precision


def mle_fit(points, tol: float = 1e-10, max_iter: int = 10_000) -> DirichletParams:
    """Maximum-likelihood Dirichlet parameters by fixed-point iteration.

    Iterates ``digamma(alpha_j) = digamma(sum alpha) + mean log x_j``, each
    step inverted by Newton, from a method-of-moments start. Stops when the
    first-order conditions hold within ``tol``.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim != 2 or x.shape[0] < 3:
        raise DirichletFitError("need at least 3 points")
    if np.any(x.max(axis=0) <= CLAMP):
        raise DirichletFitError("degenerate sample: a coordinate is identically zero")
    if np.all(np.ptp(x, axis=0) <= 1e-12):
        raise DirichletFitError("degenerate sample: all points coincide")
    x = _clamped(x)
    mean_log = np.log(x).mean(axis=0)
    alpha = _moment_start(x)
    for _ in range(max_iter):
        residual = digamma(alpha) - digamma(alpha.sum()) - mean_log
        if np.max(np.abs(residual)) <= tol:
            return DirichletParams(tuple(alpha))
        alpha = inverse_digamma(digamma(alpha.sum()) + mean_log)
        if not np.all(np.isfinite(alpha)):
            break
    raise DirichletFitError(f"no convergence within {max_iter} iterations")
