"""Dependency-free SVG line charts (cosmetic output for the CLI)."""
from __future__ import annotations

from typing import Sequence

import numpy as np

_WIDTH, _HEIGHT = 800, 500
_MARGIN = 60
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _scale(vals: np.ndarray, lo: float, hi: float, out_lo: float, out_hi: float):
    span = hi - lo
    if span == 0.0:
        span = 1.0
    return out_lo + (vals - lo) * (out_hi - out_lo) / span


def svg_line_plot(xs: np.ndarray, series: dict[str, np.ndarray], title: str,
                  xlabel: str = "t", ylabel: str = "") -> str:
    """Render one or more aligned series as an 800x500 SVG polyline chart."""
    xs = np.asarray(xs, dtype=float)
    ys_all = np.concatenate([np.asarray(v, dtype=float) for v in series.values()])
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = float(ys_all.min()), float(ys_all.max())
    pad = 0.05 * (y_hi - y_lo or 1.0)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<text x="{_WIDTH / 2}" y="24" text-anchor="middle" font-size="16">{title}</text>',
        f'<line x1="{_MARGIN}" y1="{_HEIGHT - _MARGIN}" x2="{_WIDTH - _MARGIN}" '
        f'y2="{_HEIGHT - _MARGIN}" stroke="black"/>',
        f'<line x1="{_MARGIN}" y1="{_MARGIN}" x2="{_MARGIN}" '
        f'y2="{_HEIGHT - _MARGIN}" stroke="black"/>',
        f'<text x="{_WIDTH / 2}" y="{_HEIGHT - 16}" text-anchor="middle" '
        f'font-size="12">{xlabel}</text>',
        f'<text x="18" y="{_HEIGHT / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 18 {_HEIGHT / 2})">{ylabel}</text>',
    ]
    for k, (lo, hi, axis) in enumerate((
            (x_lo, x_hi, "x"), (y_lo, y_hi, "y"))):
        for frac in (0.0, 0.5, 1.0):
            v = lo + frac * (hi - lo)
            if axis == "x":
                px = _MARGIN + frac * (_WIDTH - 2 * _MARGIN)
                parts.append(f'<text x="{px:.1f}" y="{_HEIGHT - _MARGIN + 18}" '
                             f'text-anchor="middle" font-size="10">{v:.3g}</text>')
            else:
                py = _HEIGHT - _MARGIN - frac * (_HEIGHT - 2 * _MARGIN)
                parts.append(f'<text x="{_MARGIN - 6}" y="{py:.1f}" '
                             f'text-anchor="end" font-size="10">{v:.3g}</text>')

    for k, (name, ys) in enumerate(series.items()):
        ys = np.asarray(ys, dtype=float)
        px = _scale(xs, x_lo, x_hi, _MARGIN, _WIDTH - _MARGIN)
        py = _scale(ys, y_lo, y_hi, _HEIGHT - _MARGIN, _MARGIN)
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        color = _COLORS[k % len(_COLORS)]
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.5"/>')
        parts.append(f'<text x="{_WIDTH - _MARGIN - 4}" y="{_MARGIN + 16 + 14 * k}" '
                     f'text-anchor="end" font-size="11" fill="{color}">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts)
