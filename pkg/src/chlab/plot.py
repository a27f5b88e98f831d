"""A small deterministic SVG line-plot writer."""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 400
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 150, 30, 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float, log: bool) -> str:
    return f"1e{int(round(v))}" if log else f"{v:.4g}"


def emit_plot(path, series, title: str = "", xlabel: str = "t", ylabel: str = "",
              logy: bool = False) -> Path:
    """Write ``series`` (a list of ``(label, xs, ys)``) as an SVG polyline plot.

    With ``logy`` non-positive values are dropped.  The output depends only on
    the inputs.
    """
    prepared = []
    for label, xs, ys in series:
        pts = []
        for x, y in zip(xs, ys):
            x, y = float(x), float(y)
            if logy:
                if not y > 0:
                    continue
                y = math.log10(y)
            if math.isfinite(x) and math.isfinite(y):
                pts.append((x, y))
        prepared.append((str(label), pts))

    all_pts = [p for _, pts in prepared for p in pts]
    if all_pts:
        x0, x1 = min(p[0] for p in all_pts), max(p[0] for p in all_pts)
        y0, y1 = min(p[1] for p in all_pts), max(p[1] for p in all_pts)
    else:
        x0, x1, y0, y1 = 0.0, 1.0, 0.0, 1.0
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def sx(x):
        return MARGIN_L + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return MARGIN_T + (1.0 - (y - y0) / (y1 - y0)) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<rect class="frame" x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" '
        'fill="none" stroke="black"/>',
    ]
    for i in range(5):
        fx = x0 + (x1 - x0) * i / 4
        fy = y0 + (y1 - y0) * i / 4
        out.append(f'<text x="{_fmt(sx(fx))}" y="{HEIGHT - MARGIN_B + 15}" '
                   f'text-anchor="middle">{escape(_tick_label(fx, False))}</text>')
        out.append(f'<text x="{MARGIN_L - 5}" y="{_fmt(sy(fy) + 4)}" '
                   f'text-anchor="end">{escape(_tick_label(fy, logy))}</text>')
    out.append(f'<text x="{MARGIN_L + pw / 2:.1f}" y="{HEIGHT - 12}" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    ylab = f"{ylabel} (log scale)" if logy and ylabel else ylabel
    out.append(f'<text x="14" y="{MARGIN_T + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 14 {MARGIN_T + ph / 2:.1f})">{escape(ylab)}</text>')
    for i, (label, pts) in enumerate(prepared):
        color = COLORS[i % len(COLORS)]
        if pts:
            coords = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in pts)
            out.append(f'<polyline class="series" fill="none" stroke="{color}" '
                       f'stroke-width="1.5" points="{coords}"/>')
        ly = MARGIN_T + 14 * (i + 1)
        lx = WIDTH - MARGIN_R + 10
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 18}" y2="{ly - 4}" stroke="{color}" '
                   'stroke-width="2"/>')
        out.append(f'<text x="{lx + 24}" y="{ly}">{escape(label)}</text>')
    out.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(out) + "\n")
    return path
