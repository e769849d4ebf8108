"""Minimal hand-emitted SVG line charts.

Produces self-contained, well-formed SVG with nothing but computed shapes:
axes, tick marks, polylines, and text labels.  Non-finite samples split a
polyline into segments instead of corrupting the path.  Deliberately tiny:
the only consumers are the CLI's orbit dumps and sweep boundary charts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence
from xml.sax.saxutils import escape

# a colour-blind-safe cycle used when a series does not pick its own colour
PALETTE = ("#0072b2", "#d55e00", "#009e73", "#cc79a7", "#e69f00", "#56b4e9")


@dataclass(frozen=True)
class Series:
    """One polyline: parallel x/y samples plus legend and stroke styling."""

    x: Sequence[float]
    y: Sequence[float]
    label: str = ""
    color: str | None = None
    width: float = 1.6
    dash: str | None = None     # SVG dash pattern like "6,3"

    def __post_init__(self):
        if len(self.x) != len(self.y):
            raise ValueError("x and y must have the same length")


def nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    """Round tick positions covering [lo, hi] on a 1-2-5 ladder."""
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return [0.0, 1.0]
    if hi <= lo:
        hi = lo + (abs(lo) if lo else 1.0)
    raw = (hi - lo) / max(target - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        step = mult * mag
        if raw <= step:
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 0.5 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.6g}"


class _Canvas:
    """Accumulates SVG elements in pixel coordinates."""

    def __init__(self):
        self.parts: list[str] = []

    def line(self, x1, y1, x2, y2, color="#333333", width=1.0):
        self.parts.append(
            f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
            f'stroke="{color}" stroke-width="{width:g}"/>')

    def polyline(self, pts, color, width, dash=None):
        if len(pts) < 2:
            return
        coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" '
            f'stroke-width="{width:g}"{extra}/>')

    def text(self, x, y, s, size=11, anchor="middle", color="#222222"):
        self.parts.append(
            f'<text x="{x:.2f}" y="{y:.2f}" font-size="{size}" '
            f'font-family="sans-serif" text-anchor="{anchor}" '
            f'fill="{color}">{escape(s)}</text>')


def line_chart(series: Sequence[Series], *, title: str = "",
               xlabel: str = "", ylabel: str = "",
               size: tuple[int, int] = (720, 520),
               x_range: tuple[float, float] | None = None,
               y_range: tuple[float, float] | None = None) -> str:
    """Render series into a complete standalone SVG document."""
    width, height = size
    m_left, m_right, m_top, m_bottom = 62, 16, 34, 46
    plot_w = width - m_left - m_right
    plot_h = height - m_top - m_bottom

    xs = [v for s in series for v in s.x if math.isfinite(v)]
    ys = [v for s in series for v in s.y if math.isfinite(v)]
    x_lo, x_hi = x_range if x_range else ((min(xs), max(xs)) if xs else (0.0, 1.0))
    y_lo, y_hi = y_range if y_range else ((min(ys), max(ys)) if ys else (0.0, 1.0))
    if x_hi <= x_lo:
        x_hi = x_lo + (abs(x_lo) if x_lo else 1.0)
    if y_hi <= y_lo:
        y_hi = y_lo + (abs(y_lo) if y_lo else 1.0)
    if not y_range:  # breathing room so extreme points stay off the frame
        pad = 0.04 * (y_hi - y_lo)
        y_lo, y_hi = y_lo - pad, y_hi + pad

    def px(v: float) -> float:
        return m_left + (v - x_lo) / (x_hi - x_lo) * plot_w

    def py(v: float) -> float:
        return m_top + (y_hi - v) / (y_hi - y_lo) * plot_h

    canvas = _Canvas()
    # frame
    canvas.line(m_left, m_top, m_left, m_top + plot_h)
    canvas.line(m_left, m_top + plot_h, m_left + plot_w, m_top + plot_h)
    # ticks and grid
    for t in nice_ticks(x_lo, x_hi):
        if not x_lo <= t <= x_hi:
            continue
        x = px(t)
        canvas.line(x, m_top, x, m_top + plot_h, color="#dddddd", width=0.6)
        canvas.line(x, m_top + plot_h, x, m_top + plot_h + 4)
        canvas.text(x, m_top + plot_h + 16, _fmt(t), size=10)
    for t in nice_ticks(y_lo, y_hi):
        if not y_lo <= t <= y_hi:
            continue
        y = py(t)
        canvas.line(m_left, y, m_left + plot_w, y, color="#dddddd", width=0.6)
        canvas.line(m_left - 4, y, m_left, y)
        canvas.text(m_left - 7, y + 3.5, _fmt(t), size=10, anchor="end")
    # series
    for i, s in enumerate(series):
        color = s.color or PALETTE[i % len(PALETTE)]
        segment: list[tuple[float, float]] = []
        for vx, vy in zip(s.x, s.y):
            if math.isfinite(vx) and math.isfinite(vy):
                segment.append((px(vx), py(vy)))
            else:
                canvas.polyline(segment, color, s.width, s.dash)
                segment = []
        canvas.polyline(segment, color, s.width, s.dash)
    # labels
    if title:
        canvas.text(m_left + plot_w / 2, 20, title, size=13)
    if xlabel:
        canvas.text(m_left + plot_w / 2, height - 10, xlabel)
    if ylabel:
        canvas.parts.append(
            f'<text x="14" y="{m_top + plot_h / 2:.2f}" font-size="11" '
            f'font-family="sans-serif" text-anchor="middle" fill="#222222" '
            f'transform="rotate(-90 14 {m_top + plot_h / 2:.2f})">'
            f"{escape(ylabel)}</text>")
    # legend, top-right inside the frame
    labelled = [(i, s) for i, s in enumerate(series) if s.label]
    for row, (i, s) in enumerate(labelled):
        color = s.color or PALETTE[i % len(PALETTE)]
        y = m_top + 14 + 16 * row
        x = m_left + plot_w - 150
        canvas.line(x, y - 4, x + 22, y - 4, color=color, width=s.width)
        canvas.text(x + 28, y, s.label, size=10, anchor="start")

    body = "\n".join(canvas.parts)
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">\n'
        f'<rect width="{width}" height="{height}" fill="white"/>\n'
        f"{body}\n</svg>\n"
    )


def write_svg(path: str, svg_text: str) -> None:
    """Write SVG with LF line endings regardless of platform."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(svg_text)
