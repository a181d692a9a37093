"""Compositional value types and per-cell indices.

All index functions work on a single composition or on a stack of them; the
parts always run along the last axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

SUM_TOL = 1e-6
ZERO_TOL = 1e-9


class CompositionError(ValueError):
    """Raised for vectors that cannot be read as proportions."""


def as_compositions(values, sum_tol: float = SUM_TOL) -> np.ndarray:
    """Validate proportion vectors, renormalizing small rounding drift.

    Rows summing to ``s`` with ``|s - 1| <= sum_tol`` are divided by ``s``;
    anything further off, or with a negative part, raises
    :class:`CompositionError`.
    """
    arr = np.array(values, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] == 0:
        raise CompositionError("a composition needs at least one part")
    if not np.all(np.isfinite(arr)):
        raise CompositionError("non-finite proportion")
    if np.any(arr < 0):
        raise CompositionError("negative proportion")
    sums = arr.sum(axis=-1, keepdims=True)
    if np.any(np.abs(sums - 1.0) > sum_tol):
        raise CompositionError("parts do not sum to 1")
    return arr / sums


@dataclass(frozen=True)
class Composition:
    """One point of the standard simplex."""

    parts: tuple[float, ...]

    def __post_init__(self):
        arr = as_compositions(self.parts)
        object.__setattr__(self, "parts", tuple(float(v) for v in arr))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.parts, dtype=dtype)

    def __len__(self):
        return len(self.parts)


@dataclass(frozen=True)
class WeightVector:
    """Per-cover appropriation percentages, strictly increasing."""

    weights: tuple[float, ...]

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        if len(w) < 1:
            raise ValueError("empty weight vector")
        if not all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if any(b <= a for a, b in zip(w, w[1:])):
            raise ValueError("weights must be strictly increasing")
        object.__setattr__(self, "weights", w)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.weights, dtype=dtype)

    def __len__(self):
        return len(self.weights)

    def __getitem__(self, idx):
        return self.weights[idx]

    @property
    def lo(self) -> float:
        return self.weights[0]

    @property
    def hi(self) -> float:
        return self.weights[-1]

    def restrict(self, mask: "SubsimplexMask") -> "WeightVector":
        return WeightVector(tuple(w for w, keep in zip(self.weights, mask.present) if keep))


def as_weights(w) -> WeightVector:
    return w if isinstance(w, WeightVector) else WeightVector(tuple(w))


@dataclass(frozen=True, order=True)
class SubsimplexMask:
    """Which covers are present in a cell (a face of the simplex)."""

    present: tuple[bool, ...]

    def __post_init__(self):
        present = tuple(bool(v) for v in self.present)
        if not any(present):
            raise ValueError("a subsimplex needs at least one present cover")
        object.__setattr__(self, "present", present)

    @classmethod
    def from_string(cls, text: str) -> "SubsimplexMask":
        text = text.replace(" ", "")
        if not text or set(text) - {"0", "1"}:
            raise ValueError(f"bad mask {text!r}")
        return cls(tuple(ch == "1" for ch in text))

    def __str__(self):
        return "".join("1" if p else "0" for p in self.present)

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(i for i, p in enumerate(self.present) if p)

    @property
    def size(self) -> int:
        """Number of present covers."""
        return len(self.indices)

    @property
    def dim(self) -> int:
        """Geometric dimension of the face."""
        return self.size - 1

    def reduce(self, points) -> np.ndarray:
        """Keep only the present coordinates."""
        return np.asarray(points, dtype=float)[..., list(self.indices)]

    def embed(self, reduced) -> np.ndarray:
        """Inverse of :meth:`reduce`; absent covers become exact zeros."""
        reduced = np.asarray(reduced, dtype=float)
        out = np.zeros(reduced.shape[:-1] + (len(self.present),))
        out[..., list(self.indices)] = reduced
        return out


def _xlogx(p: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)


def shannon_index(c, base: int):
    """Shannon entropy of the parts in logarithm base ``base``.

    ``base`` should be the total number of cover categories of the study, so
    that the most even composition scores exactly 1.
    """
    if base < 2:
        raise ValueError("base must be at least 2")
    p = np.asarray(c, dtype=float)
    h = -_xlogx(p).sum(axis=-1) / np.log(base)
    # exact zero for single-cover cells, and no -0.0
    h = np.maximum(h, 0.0)
    return h if np.ndim(h) else float(h)


def appropriation(c, w):
    """Weighted average of the per-cover appropriation percentages."""
    w = np.asarray(as_weights(w), dtype=float)
    p = np.asarray(c, dtype=float)
    if p.shape[-1] != w.size:
        raise ValueError(f"composition has {p.shape[-1]} parts, weights have {w.size}")
    a = p @ w
    a = np.clip(a, w[0], w[-1])
    return a if np.ndim(a) else float(a)


def l_index(c, urban_index: int):
    """Shannon index over non-urban covers, scaled by the non-urban share.

    Non-urban parts are renormalized to sum to one and the logarithm base is
    the number of non-urban categories, so the maximum is 1.
    """
    p = np.asarray(c, dtype=float)
    n = p.shape[-1]
    if not 0 <= urban_index < n:
        raise IndexError(f"urban_index {urban_index} out of range for {n} covers")
    if n < 3:
        raise ValueError("the L index needs at least two non-urban covers")
    pu = p[..., urban_index]
    rest = np.delete(p, urban_index, axis=-1)
    share = 1.0 - pu
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(share[..., None] > 0, rest / np.where(share > 0, share, 1.0)[..., None], 0.0)
    h = -_xlogx(q).sum(axis=-1) / np.log(n - 1)
    out = np.clip(share * h, 0.0, 1.0)
    return out if np.ndim(out) else float(out)


def simpson_index(c):
    p = np.asarray(c, dtype=float)
    out = 1.0 - (p * p).sum(axis=-1)
    return out if np.ndim(out) else float(out)


def berger_parker_index(c):
    """Reciprocal of the largest proportion."""
    p = np.asarray(c, dtype=float)
    top = p.max(axis=-1)
    if np.any(top <= 0):
        raise ValueError("composition has no positive part")
    out = 1.0 / top
    return out if np.ndim(out) else float(out)


def sample_uniform_simplex(dim: int, count: int, seed=None) -> np.ndarray:
    """Draw ``count`` points uniformly on the simplex with ``dim`` parts.

    Normalized unit-exponential spacings. Returns an array of shape
    ``(count, dim)``; ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    y = rng.standard_exponential((count, dim))
    return y / y.sum(axis=1, keepdims=True)


def subsimplex_of(c, zero_tol: float = ZERO_TOL) -> SubsimplexMask:
    p = np.asarray(c, dtype=float)
    present = p > zero_tol
    if not present.any():
        raise ValueError("all parts are below zero_tol")
    return SubsimplexMask(tuple(bool(v) for v in present))


def subsimplex_masks(points, zero_tol: float = ZERO_TOL) -> list[SubsimplexMask]:
    """Vectorized :func:`subsimplex_of` over the rows of ``points``."""
    present = np.asarray(points, dtype=float) > zero_tol
    if not present.any(axis=1).all():
        raise ValueError("a row has all parts below zero_tol")
    return [SubsimplexMask(tuple(row)) for row in present.tolist()]


def uniform_face_points(mask: SubsimplexMask, count: int, seed=None) -> np.ndarray:
    """Uniform points on a face, embedded into full compositions."""
    return mask.embed(sample_uniform_simplex(mask.size, count, seed))


__all__: Sequence[str] = [
    "Composition",
    "CompositionError",
    "SubsimplexMask",
    "WeightVector",
    "appropriation",
    "as_compositions",
    "as_weights",
    "berger_parker_index",
    "l_index",
    "sample_uniform_simplex",
    "shannon_index",
    "simpson_index",
    "subsimplex_masks",
    "subsimplex_of",
    "uniform_face_points",
]
