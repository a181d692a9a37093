"""Bare-bones SVG line and scatter plots."""

from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT, MARGIN = 640, 420, 50


@dataclass
class Series:
    x: np.ndarray
    y: np.ndarray
    color: str = "black"
    kind: str = "line"  # or "points"
    label: str = ""


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def plot(series, xlabel: str = "", ylabel: str = "", title: str = "", xlim=None, ylim=None) -> str:
    """Render ``series`` into one SVG 1.1 document. NaN values break lines."""
    xs = np.concatenate([np.asarray(s.x, float) for s in series])
    ys = np.concatenate([np.asarray(s.y, float) for s in series])
    x0, x1 = xlim or (np.nanmin(xs), np.nanmax(xs))
    y0, y1 = ylim or (np.nanmin(ys), np.nanmax(ys))
    if x1 <= x0:
        x1 = x0 + 1.0
    if y1 <= y0:
        y1 = y0 + 1.0
    pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

    def px(x):
        return MARGIN + (np.asarray(x, float) - x0) / (x1 - x0) * pw

    def py(y):
        return HEIGHT - MARGIN - (np.asarray(y, float) - y0) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}">',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for frac in np.linspace(0, 1, 5):
        xv, yv = x0 + frac * (x1 - x0), y0 + frac * (y1 - y0)
        out.append(
            f'<text x="{_fmt(px(xv))}" y="{HEIGHT - MARGIN + 16}" font-size="11" '
            f'text-anchor="middle">{xv:.4g}</text>'
        )
        out.append(
            f'<text x="{MARGIN - 6}" y="{_fmt(py(yv) + 4)}" font-size="11" '
            f'text-anchor="end">{yv:.4g}</text>'
        )
    for s in series:
        sx, sy = px(s.x), py(s.y)
        if s.kind == "points":
            for a, b in zip(sx, sy):
                if np.isfinite(a) and np.isfinite(b):
                    out.append(f'<circle cx="{_fmt(a)}" cy="{_fmt(b)}" r="1.2" fill="{s.color}"/>')
            continue
        ok = np.isfinite(sx) & np.isfinite(sy)
        run: list[str] = []
        for a, b, good in zip(sx, sy, ok):
            if good:
                run.append(f"{_fmt(a)},{_fmt(b)}")
            elif run:
                out.append(_polyline(run, s.color))
                run = []
        if run:
            out.append(_polyline(run, s.color))
    if title:
        out.append(f'<text x="{WIDTH / 2}" y="{MARGIN - 16}" font-size="14" text-anchor="middle">{escape(title)}</text>')
    if xlabel:
        out.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 10}" font-size="12" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        out.append(
            f'<text x="14" y="{HEIGHT / 2}" font-size="12" text-anchor="middle" '
            f'transform="rotate(-90 14 {HEIGHT / 2})">{escape(ylabel)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _polyline(points: list[str], color: str) -> str:
    return f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(points)}"/>'
