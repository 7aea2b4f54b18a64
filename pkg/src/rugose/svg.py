"""Minimal deterministic SVG plots: log-log scatter with a fitted line, or a time series."""
from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

from .errors import EmptySeries

WIDTH, HEIGHT = 480, 360
MARGIN = 60


@dataclass(frozen=True)
class AxesSpec:
    xlabel: str = "x"
    ylabel: str = "y"
    title: str = ""
    log: bool = True


def _fmt(v):
    return f"{v:.3f}"


def emit_svg(points, axes=AxesSpec(), fit=None):
    """Render ``points`` (``(x, y)`` pairs) as an SVG 1.1 document.

    Each point becomes one ``<circle>`` marker and the document holds exactly
    one ``<path>``: the fitted line when ``fit`` (anything with ``predict``)
    is given, otherwise the polyline through the points.  Output depends
    only on the inputs.
    """
    pts = [(float(x), float(y)) for x, y in points]
    if not pts:
        raise EmptySeries("nothing to plot")
    tx = (lambda v: math.log10(v)) if axes.log else (lambda v: v)
    if axes.log and any(x <= 0 or y <= 0 for x, y in pts):
        raise ValueError("log axes need positive data")
    xs = [tx(x) for x, _ in pts]
    ys = [tx(y) for _, y in pts]
    fit_pts = None
    if fit is not None:
        x_lo, x_hi = min(x for x, _ in pts), max(x for x, _ in pts)
        fit_pts = [(x, float(fit.predict(x))) for x in (x_lo, x_hi)]
        ys += [tx(y) for _, y in fit_pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def px(v):
        return MARGIN + (tx(v) - x0) / (x1 - x0) * (WIDTH - 2 * MARGIN)

    def py(v):
        return HEIGHT - MARGIN - (tx(v) - y0) / (y1 - y0) * (HEIGHT - 2 * MARGIN)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
    ]
    scale = "log10 " if axes.log else ""
    for label, v, tick_x, tick_y in (
        ("x", x0, MARGIN, HEIGHT - MARGIN + 15),
        ("x", x1, WIDTH - MARGIN, HEIGHT - MARGIN + 15),
        ("y", y0, MARGIN - 5, HEIGHT - MARGIN),
        ("y", y1, MARGIN - 5, MARGIN),
    ):
        anchor = "middle" if label == "x" else "end"
        out.append(f'<text x="{tick_x}" y="{tick_y}" font-size="10" text-anchor="{anchor}">{v:.3g}</text>')
    out.append(
        f'<text x="{WIDTH / 2:g}" y="{HEIGHT - 15}" font-size="12" text-anchor="middle">'
        f"{escape(scale + axes.xlabel)}</text>"
    )
    out.append(
        f'<text x="15" y="{HEIGHT / 2:g}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 15 {HEIGHT / 2:g})">{escape(scale + axes.ylabel)}</text>'
    )
    if axes.title:
        out.append(f'<text x="{WIDTH / 2:g}" y="25" font-size="14" text-anchor="middle">{escape(axes.title)}</text>')
    line = fit_pts if fit_pts is not None else sorted(pts)
    d = " ".join(("M" if j == 0 else "L") + f"{_fmt(px(x))},{_fmt(py(y))}" for j, (x, y) in enumerate(line))
    out.append(f'<path d="{d}" fill="none" stroke="steelblue" stroke-width="1.5"/>')
    for x, y in pts:
        out.append(f'<circle cx="{_fmt(px(x))}" cy="{_fmt(py(y))}" r="3" fill="crimson"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
