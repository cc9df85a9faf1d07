"""Minimal static SVG writer: stacked panels of polylines and scatter points."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

__all__ = ["Series", "Panel", "render"]

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf")
WIDTH = 640
PANEL_HEIGHT = 220
MARGIN = 48


@dataclass
class Series:
    label: str
    x: list[float]
    y: list[float]
    kind: str = "line"  # 'line' or 'points'
    color: str | None = None


@dataclass
class Panel:
    title: str
    xlabel: str
    ylabel: str
    series: list[Series] = field(default_factory=list)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _bounds(values):
    vals = [v for v in values if math.isfinite(v)]
    if not vals:
        return 0.0, 1.0
    lo, hi = min(vals), max(vals)
    if hi == lo:
        pad = 0.5 * max(abs(lo), 1.0)
        return lo - pad, hi + pad
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _panel(panel: Panel, top: float) -> list[str]:
    x0, x1 = _bounds([v for s in panel.series for v in s.x])
    y0, y1 = _bounds([v for s in panel.series for v in s.y])
    left, right = MARGIN, WIDTH - MARGIN / 2
    bottom, upper = top + PANEL_HEIGHT - MARGIN / 2, top + MARGIN / 2

    def px(v):
        return left + (v - x0) / (x1 - x0) * (right - left)

    def py(v):
        return bottom - (v - y0) / (y1 - y0) * (bottom - upper)

    out = [
        f'<rect x="{_fmt(left)}" y="{_fmt(upper)}" width="{_fmt(right - left)}" '
        f'height="{_fmt(bottom - upper)}" fill="none" stroke="#444"/>',
        f'<text x="{_fmt(left)}" y="{_fmt(upper - 6)}" font-size="12">{escape(panel.title)}</text>',
        f'<text x="{_fmt((left + right) / 2)}" y="{_fmt(bottom + 18)}" font-size="11" '
        f'text-anchor="middle">{escape(panel.xlabel)}</text>',
        f'<text x="12" y="{_fmt((upper + bottom) / 2)}" font-size="11" '
        f'transform="rotate(-90 12 {_fmt((upper + bottom) / 2)})" text-anchor="middle">{escape(panel.ylabel)}</text>',
        f'<text x="{_fmt(left)}" y="{_fmt(bottom + 12)}" font-size="9">{x0:.4g}</text>',
        f'<text x="{_fmt(right)}" y="{_fmt(bottom + 12)}" font-size="9" text-anchor="end">{x1:.4g}</text>',
        f'<text x="{_fmt(left - 4)}" y="{_fmt(bottom)}" font-size="9" text-anchor="end">{y0:.4g}</text>',
        f'<text x="{_fmt(left - 4)}" y="{_fmt(upper + 8)}" font-size="9" text-anchor="end">{y1:.4g}</text>',
    ]
    for i, s in enumerate(panel.series):
        color = s.color or PALETTE[i % len(PALETTE)]
        pts = [(px(a), py(b)) for a, b in zip(s.x, s.y) if math.isfinite(a) and math.isfinite(b)]
        if s.kind == "points":
            out += [f'<circle cx="{_fmt(a)}" cy="{_fmt(b)}" r="1.5" fill="{color}"/>' for a, b in pts]
        elif pts:
            path = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in pts)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.2"/>')
        out.append(
            f'<text x="{_fmt(right - 4)}" y="{_fmt(upper + 14 + 12 * i)}" font-size="10" '
            f'text-anchor="end" fill="{color}">{escape(s.label)}</text>'
        )
    return out


def render(panels: list[Panel]) -> str:
    height = PANEL_HEIGHT * len(panels)
    body = []
    for k, p in enumerate(panels):
        body += _panel(p, k * PANEL_HEIGHT)
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" '
        f'viewBox="0 0 {WIDTH} {height}">'
    )
    return "\n".join([head, '<rect width="100%" height="100%" fill="white"/>', *body, "</svg>"]) + "\n"
