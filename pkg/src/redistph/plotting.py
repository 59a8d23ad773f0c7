"""Minimal SVG scatter plots of persistence diagrams.

Layout follows the usual diagram convention: unit square above the
diagonal, dashed guides at the diagonal and at birth 0.5, and infinite
deaths drawn at height 1.1.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .persistence import INF

INF_DRAW = 1.1
_SIZE = 320
_PAD = 30


def _xy(b: float, d: float) -> tuple[float, float]:
    d = INF_DRAW if d == INF else d
    scale = _SIZE - 2 * _PAD
    return _PAD + b * scale, _SIZE - _PAD - d / INF_DRAW * scale


def diagram_svg(
    layers: Sequence[tuple[Iterable[tuple[float, float]], str]],
    title: str = "",
    radius: float = 2.0,
) -> str:
    """Render ``(points, colour)`` layers into an SVG document."""
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SIZE}" height="{_SIZE}" viewBox="0 0 {_SIZE} {_SIZE}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    x0, y0 = _xy(0, 0)
    x1, y1 = _xy(1, 1)
    out.append(f'<line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y1:.2f}" stroke="gray" stroke-dasharray="4 3"/>')
    hx, hy0 = _xy(0.5, 0)
    _, hy1 = _xy(0.5, 1)
    out.append(f'<line x1="{hx:.2f}" y1="{hy0:.2f}" x2="{hx:.2f}" y2="{hy1:.2f}" stroke="gray" stroke-dasharray="4 3"/>')
    ix0, iy = _xy(0, INF)
    ix1, _ = _xy(1, INF)
    out.append(f'<line x1="{ix0:.2f}" y1="{iy:.2f}" x2="{ix1:.2f}" y2="{iy:.2f}" stroke="lightgray"/>')
    out.append(f'<text x="{ix0 - 18:.2f}" y="{iy + 4:.2f}" font-size="12">∞</text>')
    out.append(f'<rect x="{x0:.2f}" y="{y1:.2f}" width="{x1 - x0:.2f}" height="{y0 - y1:.2f}" fill="none" stroke="black"/>')
    if title:
        out.append(f'<text x="{_PAD}" y="16" font-size="12">{title}</text>')
    for points, colour in layers:
        for b, d in points:
            x, y = _xy(b, d)
            out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{radius}" fill="{colour}" fill-opacity="0.6"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
