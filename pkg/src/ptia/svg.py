"""Minimal, byte-deterministic SVG line charts."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 400
MARGIN = 60


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    return [lo + (hi - lo) * k / (n - 1) for k in range(n)]


def line_chart(x, y, *, title: str = "", x_label: str = "", y_label: str = "") -> str:
    """Single-series line chart on a fixed canvas."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size != y.size or x.size == 0:
        raise ValueError("x and y must be non-empty and of equal length")
    x_lo, x_hi = float(x.min()), float(x.max())
    y_lo, y_hi = float(y.min()), float(y.max())
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

    def px(v):
        return MARGIN + (v - x_lo) / (x_hi - x_lo) * pw

    def py(v):
        return HEIGHT - MARGIN - (v - y_lo) / (y_hi - y_lo) * ph

    pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x.tolist(), y.tolist()))
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH // 2}" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">{escape(title)}</text>',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(x_lo, x_hi):
        out.append(
            f'<text x="{px(t):.2f}" y="{HEIGHT - MARGIN + 16}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{t:#.4g}</text>'
        )
    for t in _ticks(y_lo, y_hi):
        out.append(
            f'<text x="{MARGIN - 6}" y="{py(t) + 3:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10">{t:#.4g}</text>'
        )
    out += [
        f'<text x="{WIDTH // 2}" y="{HEIGHT - 16}" text-anchor="middle" font-family="sans-serif" font-size="12">{escape(x_label)}</text>',
        f'<text x="16" y="{HEIGHT // 2}" text-anchor="middle" font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {HEIGHT // 2})">{escape(y_label)}</text>',
        f'<polyline fill="none" stroke="#1f77b4" stroke-width="1.5" points="{pts}"/>',
        "</svg>",
    ]
    return "\n".join(out) + "\n"
