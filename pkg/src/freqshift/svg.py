"""Minimal SVG line plots for the figure commands."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#000000")


def line_plot(series, *, xlabel: str, ylabel: str, title: str = "",
              width: int = 640, height: int = 420) -> str:
    """``series`` is a sequence of ``(label, x, y)``; returns an SVG document."""
    ml, mr, mt, mb = 70, 140, 30, 50
    xs = np.concatenate([np.asarray(s[1], float) for s in series])
    ys = np.concatenate([np.asarray(s[2], float) for s in series])
    ok = np.isfinite(xs) & np.isfinite(ys)
    x0, x1 = float(xs[ok].min()), float(xs[ok].max())
    y0, y1 = min(0.0, float(ys[ok].min())), float(ys[ok].max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pw, ph = width - ml - mr, height - mt - mb

    def px(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def py(y):
        return mt + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="12">',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
        f'<text x="{ml + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="16" y="{mt + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {mt + ph / 2:.1f})">{escape(ylabel)}</text>',
        f'<text x="{ml}" y="{mt + ph + 16}" text-anchor="middle">{x0:.3g}</text>',
        f'<text x="{ml + pw}" y="{mt + ph + 16}" text-anchor="middle">{x1:.3g}</text>',
        f'<text x="{ml - 6}" y="{mt + ph}" text-anchor="end">{y0:.3g}</text>',
        f'<text x="{ml - 6}" y="{mt + 10}" text-anchor="end">{y1:.3g}</text>',
    ]
    if title:
        out.append(f'<text x="{ml + pw / 2:.1f}" y="18" text-anchor="middle">{escape(title)}</text>')
    for i, (label, x, y) in enumerate(series):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        keep = np.isfinite(x) & np.isfinite(y)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x[keep], y[keep]))
        color = COLORS[i % len(COLORS)]
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = mt + 14 + 16 * i
        out.append(f'<line x1="{ml + pw + 10}" y1="{ly - 4}" x2="{ml + pw + 30}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{ml + pw + 34}" y="{ly}">{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
