"""Stepwise estimates of ``a -> E[index | A = a]`` and their distance."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .compositions import as_weights

DEFAULT_BINS = 200


@dataclass(frozen=True, eq=False)
class CurveEstimate:
    """Per-bin means of an index; empty bins hold NaN and a zero count."""

    bin_edges: np.ndarray
    bin_means: np.ndarray
    bin_counts: np.ndarray

    @property
    def bins(self) -> int:
        return len(self.bin_counts)

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def nonempty(self) -> np.ndarray:
        return self.bin_counts > 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["bin_left", "bin_right", "count", "mean"])
        for lo, hi, n, m in zip(self.bin_edges[:-1], self.bin_edges[1:], self.bin_counts, self.bin_means):
            out.writerow([repr(float(lo)), repr(float(hi)), int(n), repr(float(m)) if n else ""])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CurveEstimate":
        rows = list(csv.DictReader(io.StringIO(text)))
        edges = [float(r["bin_left"]) for r in rows] + [float(rows[-1]["bin_right"])]
        counts = [int(r["count"]) for r in rows]
        means = [float(r["mean"]) if r["mean"] else np.nan for r in rows]
        return _frozen_curve(edges, means, counts)


def _frozen_curve(edges, means, counts) -> CurveEstimate:
    arrays = [np.asarray(edges, float), np.asarray(means, float), np.asarray(counts, np.int64)]
    for a in arrays:
        a.setflags(write=False)
    return CurveEstimate(*arrays)


def bin_edges(w, bins: int = DEFAULT_BINS) -> np.ndarray:
    """Equal-width edges over ``[w_1, w_n]`` with exact end points."""
    w = as_weights(w)
    edges = w.lo + (w.hi - w.lo) * (np.arange(bins + 1) / bins)
    edges[-1] = w.hi
    return edges


def estimate_curve(a, index=None, w=None, bins: int = DEFAULT_BINS) -> CurveEstimate:
    """Bin ``a`` over ``[w_1, w_n]`` and average ``index`` in each bin.

    ``a`` and ``index`` are equal-length arrays; alternatively pass a single
    ``(k, 2)`` array of pairs as ``a`` and leave ``index`` out. The last bin
    includes its right edge.
    """
    if w is None:
        raise TypeError("weights are required")
    if bins < 2:
        raise ValueError("bins must be >= 2")
    if index is None:
        pairs = np.asarray(a, dtype=float).reshape(-1, 2)
        a, index = pairs[:, 0], pairs[:, 1]
    a = np.asarray(a, dtype=float).ravel()
    index = np.asarray(index, dtype=float).ravel()
    if a.shape != index.shape:
        raise ValueError("A and index have different lengths")
    edges = bin_edges(w, bins)
    if np.any(a < edges[0]) or np.any(a > edges[-1]) or not np.all(np.isfinite(a)):
        raise ValueError("appropriation value outside [w_1, w_n]")
    which = np.clip(np.searchsorted(edges, a, side="right") - 1, 0, bins - 1)
    counts = np.bincount(which, minlength=bins)
    sums = np.bincount(which, weights=index, minlength=bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return _frozen_curve(edges, means, counts)


def _check_edges(c1: CurveEstimate, c2: CurveEstimate):
    if c1.bin_edges.shape != c2.bin_edges.shape or not np.array_equal(c1.bin_edges, c2.bin_edges):
        raise ValueError("curves have different bin edges")


def ise(c1: CurveEstimate, c2: CurveEstimate) -> float:
    """Integrated square difference over bins nonempty in both curves."""
    _check_edges(c1, c2)
    both = c1.nonempty & c2.nonempty
    d = c1.bin_means[both] - c2.bin_means[both]
    return float(np.sum(d * d * c1.widths[both]))


def skipped_width(c1: CurveEstimate, c2: CurveEstimate) -> float:
    """Total width of the bins :func:`ise` leaves out."""
    _check_edges(c1, c2)
    return float(c1.widths[~(c1.nonempty & c2.nonempty)].sum())


def coarsen(curve: CurveEstimate, factor: int) -> CurveEstimate:
    """Merge groups of ``factor`` adjacent bins, weighting means by counts."""
    if curve.bins % factor:
        raise ValueError("factor must divide the number of bins")
    counts = curve.bin_counts.reshape(-1, factor)
    sums = np.where(curve.nonempty, curve.bin_means * curve.bin_counts, 0.0).reshape(-1, factor)
    total = counts.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.where(total > 0, sums.sum(axis=1) / np.maximum(total, 1), np.nan)
    return _frozen_curve(curve.bin_edges[::factor], means, total)
