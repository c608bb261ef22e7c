"""Minimal SVG line plots; no external renderer."""

from __future__ import annotations

import math
from typing import Sequence

_W, _H = 640, 420
_MARGIN = 56


def _scale(vals: Sequence[float], lo_px: float, hi_px: float):
    vmin, vmax = min(vals), max(vals)
    if vmax == vmin:
        vmax = vmin + 1.0
    span = vmax - vmin

    def to_px(v: float) -> float:
        return lo_px + (v - vmin) / span * (hi_px - lo_px)

    return to_px, vmin, vmax


def line_plot(
    path: str,
    xs: Sequence[float],
    ys: Sequence[float],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    log_y: bool = False,
) -> None:
    """Write a single-series line plot as a standalone SVG file."""
    if len(xs) != len(ys) or not xs:
        raise ValueError("need equal-length non-empty series")
    yvals = [math.log10(y) for y in ys] if log_y else list(ys)
    to_x, xmin, xmax = _scale(list(xs), _MARGIN, _W - _MARGIN // 2)
    to_y, ymin, ymax = _scale(yvals, _H - _MARGIN, _MARGIN // 2)

    pts = " ".join(f"{to_x(x):.2f},{to_y(y):.2f}" for x, y in zip(xs, yvals))
    ylab = f"log10 {ylabel}" if log_y else ylabel
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_MARGIN}" y="{_MARGIN // 2}" width="{_W - 1.5 * _MARGIN}" '
        f'height="{_H - 1.5 * _MARGIN}" fill="none" stroke="#888"/>',
        f'<polyline points="{pts}" fill="none" stroke="#1f5fa8" stroke-width="1.5"/>',
        f'<text x="{_W / 2:.0f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<text x="{_W / 2:.0f}" y="{_H - 12}" text-anchor="middle" font-size="12">{xlabel}</text>',
        f'<text x="16" y="{_H / 2:.0f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {_H / 2:.0f})">{ylab}</text>',
        f'<text x="{_MARGIN}" y="{_H - _MARGIN + 16}" font-size="10">{xmin:.6g}</text>',
        f'<text x="{_W - _MARGIN // 2}" y="{_H - _MARGIN + 16}" text-anchor="end" '
        f'font-size="10">{xmax:.6g}</text>',
        f'<text x="{_MARGIN - 4}" y="{_H - _MARGIN}" text-anchor="end" font-size="10">{ymin:.6g}</text>',
        f'<text x="{_MARGIN - 4}" y="{_MARGIN // 2 + 10}" text-anchor="end" font-size="10">{ymax:.6g}</text>',
        "</svg>",
    ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
