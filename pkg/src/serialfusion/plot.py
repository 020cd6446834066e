"""Minimal SVG line charts for ROC curves with a log-scaled FAR axis.

Presentation only: nothing here feeds back into numeric outputs.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 480
MARGIN = dict(left=70, right=20, top=30, bottom=55)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def roc_svg(series, band=None, title: str = "", far_floor: float | None = None) -> str:
    """Render ``series`` (list of ``(label, far, frr)``) as an SVG document.

    FAR goes on a log10 x axis, FRR on a linear y axis. Zero FAR values are
    drawn at ``far_floor`` (default: a decade below the smallest positive
    FAR). ``band`` is an optional ``(far_low, far_high, frr)`` triple drawn
    as a shaded region.
    """
    positives = [np.asarray(f)[np.asarray(f) > 0] for _, f, _ in series]
    smallest = min((p.min() for p in positives if p.size), default=1e-3)
    floor = far_floor or 10 ** math.floor(math.log10(smallest) - 1)
    x_lo, x_hi = math.log10(floor), 0.0
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(far):
        lf = np.log10(np.maximum(np.asarray(far, float), floor))
        return MARGIN["left"] + (lf - x_lo) / (x_hi - x_lo) * pw

    def sy(frr):
        return MARGIN["top"] + (1.0 - np.asarray(frr, float)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{WIDTH / 2}" y="18" text-anchor="middle">{escape(title)}</text>')

    for decade in range(int(x_lo), 1):
        x = _fmt(float(sx(10.0**decade)))
        out.append(f'<line x1="{x}" y1="{MARGIN["top"]}" x2="{x}" '
                   f'y2="{HEIGHT - MARGIN["bottom"]}" stroke="#ddd"/>')
        out.append(f'<text x="{x}" y="{HEIGHT - MARGIN["bottom"] + 16}" '
                   f'text-anchor="middle">1e{decade}</text>')
    for tick in np.linspace(0, 1, 6):
        y = _fmt(float(sy(tick)))
        out.append(f'<line x1="{MARGIN["left"]}" y1="{y}" x2="{WIDTH - MARGIN["right"]}" '
                   f'y2="{y}" stroke="#ddd"/>')
        out.append(f'<text x="{MARGIN["left"] - 6}" y="{y}" text-anchor="end" '
                   f'dominant-baseline="middle">{tick:.1f}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2}" y="{HEIGHT - 12}" '
               'text-anchor="middle">FAR (log scale)</text>')
    out.append(f'<text x="16" y="{MARGIN["top"] + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {MARGIN["top"] + ph / 2})">FRR</text>')

    if band is not None:
        lo, hi, frr = (np.asarray(v, float) for v in band)
        xs = np.concatenate([sx(lo), sx(hi)[::-1]])
        ys = np.concatenate([sy(frr), sy(frr)[::-1]])
        pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in zip(xs, ys))
        out.append(f'<polygon points="{pts}" fill="#999" fill-opacity="0.3" stroke="none"/>')

    for k, (label, far, frr) in enumerate(series):
        colour = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in zip(sx(far), sy(frr)))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{colour}" stroke-width="1.5"/>')
        ly = MARGIN["top"] + 14 + 16 * k
        lx = WIDTH - MARGIN["right"] - 150
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
