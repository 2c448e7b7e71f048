"""Minimal deterministic SVG line plots (fixed canvas, no timestamps)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence
from xml.sax.saxutils import escape

__all__ = ["Series", "render_svg"]

WIDTH, HEIGHT = 640, 480
MARGIN = 56
PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


@dataclass
class Series:
    xs: Sequence[float]
    ys: Sequence[float]
    color: str | None = None
    width: float = 1.2
    dashed: bool = False
    label: str = ""


def _finite(v: float) -> bool:
    return v is not None and math.isfinite(v)


def _bounds(series: Sequence[Series], equal_aspect: bool):
    xs = [x for s in series for x in s.xs if _finite(x)]
    ys = [y for s in series for y in s.ys if _finite(y)]
    if not xs or not ys:
        return (0.0, 1.0, 0.0, 1.0)
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    if equal_aspect:
        cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
        half = 0.5 * max(x1 - x0, (y1 - y0) * (WIDTH - 2 * MARGIN) / (HEIGHT - 2 * MARGIN))
        x0, x1 = cx - half, cx + half
        hy = half * (HEIGHT - 2 * MARGIN) / (WIDTH - 2 * MARGIN)
        y0, y1 = cy - hy, cy + hy
    return x0, x1, y0, y1


def _num(v: float) -> str:
    return f"{v:.3f}"


def render_svg(series: Sequence[Series], *, title: str = "", xlabel: str = "", ylabel: str = "",
               equal_aspect: bool = False) -> str:
    x0, x1, y0, y1 = _bounds(series, equal_aspect)
    pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

    def px(x):
        return MARGIN + (x - x0) / (x1 - x0) * pw

    def py(y):
        return HEIGHT - MARGIN - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="#444" stroke-width="1"/>',
    ]
    for frac in (0.0, 0.5, 1.0):
        xv = x0 + frac * (x1 - x0)
        yv = y0 + frac * (y1 - y0)
        out.append(f'<text x="{_num(px(xv))}" y="{HEIGHT - MARGIN + 18}" font-size="11" text-anchor="middle">{xv:.4g}</text>')
        out.append(f'<text x="{MARGIN - 6}" y="{_num(py(yv) + 4)}" font-size="11" text-anchor="end">{yv:.4g}</text>')
    if title:
        out.append(f'<text x="{WIDTH / 2}" y="24" font-size="14" text-anchor="middle">{escape(title)}</text>')
    if xlabel:
        out.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" font-size="12" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        out.append(
            f'<text x="16" y="{HEIGHT / 2}" font-size="12" text-anchor="middle" '
            f'transform="rotate(-90 16 {HEIGHT / 2})">{escape(ylabel)}</text>'
        )
    for idx, s in enumerate(series):
        color = s.color or PALETTE[idx % len(PALETTE)]
        # split at non-finite samples
        runs, cur = [], []
        for x, y in zip(s.xs, s.ys):
            if _finite(x) and _finite(y):
                cur.append(f"{_num(px(x))},{_num(py(y))}")
            elif cur:
                runs.append(cur)
                cur = []
        if cur:
            runs.append(cur)
        dash = ' stroke-dasharray="4 3"' if s.dashed else ""
        for run in runs:
            out.append(
                f'<polyline fill="none" stroke="{color}" stroke-width="{s.width}"{dash} points="{" ".join(run)}"/>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"
