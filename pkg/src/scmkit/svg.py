"""Standalone, byte-deterministic SVG charts for study reports.

Line charts draw one ``<polyline>`` per series and nothing else as a
polyline (axes and ticks are ``<line>`` elements), so the number of series
can be read back from the document.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence
from xml.sax.saxutils import escape, quoteattr

from .errors import EmptySeries

__all__ = ["Series", "emit_svg", "emit_bar_svg", "STYLES"]

STYLES = {
    "treated": {"stroke": "#000000", "stroke-width": "2.5"},
    "synthetic": {"stroke": "#000000", "stroke-width": "2", "stroke-dasharray": "6 4"},
    "placebo": {"stroke": "#b0b0b0", "stroke-width": "1"},
    "other": {"stroke": "#1f77b4", "stroke-width": "1.5"},
}
# placebos underneath, treated on top
_LAYER = {"placebo": 0, "other": 1, "synthetic": 2, "treated": 3}

WIDTH, HEIGHT = 720, 440
LEFT, RIGHT, TOP, BOTTOM = 70, 150, 40, 50


@dataclass(frozen=True)
class Series:
    label: str
    x: Sequence[float]
    y: Sequence[float]
    role: str = "other"

    def __post_init__(self):
        if self.role not in STYLES:
            raise ValueError(f"unknown series role {self.role!r}")
        if len(self.x) != len(self.y):
            raise ValueError(f"series {self.label!r}: x and y lengths differ")


def _f(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


def _tick_label(v: float) -> str:
    s = f"{v:.4g}"
    return "0" if s in ("-0", "-0.0") else s


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    span = hi - lo
    raw = span / max(n - 1, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step - 1e-9) * step
    ticks = []
    k = 0
    while first + k * step <= hi + 1e-9 * step:
        ticks.append(round(first + k * step, 12))
        k += 1
    return ticks


def _padded_range(values: Sequence[float]) -> tuple[float, float]:
    lo, hi = min(values), max(values)
    if hi - lo < 1e-12:
        pad = max(abs(lo) * 0.1, 1.0)
        return lo - pad, hi + pad
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _header(title: str) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]


def emit_svg(
    series: Sequence[Series],
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    vline: float | None = None,
    hline: float | None = None,
) -> str:
    """Line chart of ``series`` with an optional vertical rule (e.g. at t0)."""
    series = [s for s in series if len(s.x)]
    if not series:
        raise EmptySeries("nothing to plot")
    xs = [float(v) for s in series for v in s.x]
    ys = [float(v) for s in series for v in s.y if math.isfinite(v)]
    if not ys:
        raise EmptySeries("no finite values to plot")
    if hline is not None:
        ys.append(hline)
    x_lo, x_hi = min(xs), max(xs)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 1, x_hi + 1
    y_lo, y_hi = _padded_range(ys)
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(x: float) -> float:
        return LEFT + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y: float) -> float:
        return TOP + (y_hi - y) / (y_hi - y_lo) * ph

    out = _header(title)
    out.append(
        f'<line x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}" stroke="#000000"/>'
    )
    out.append(f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}" stroke="#000000"/>')
    for t in _nice_ticks(y_lo, y_hi):
        y = _f(py(t))
        out.append(f'<line x1="{LEFT - 4}" y1="{y}" x2="{LEFT}" y2="{y}" stroke="#000000"/>')
        out.append(f'<text x="{LEFT - 6}" y="{y}" text-anchor="end" dy="4">{_tick_label(t)}</text>')
    for t in _nice_ticks(x_lo, x_hi, n=min(8, int(x_hi - x_lo) + 1)):
        x = _f(px(t))
        out.append(f'<line x1="{x}" y1="{TOP + ph}" x2="{x}" y2="{TOP + ph + 4}" stroke="#000000"/>')
        out.append(f'<text x="{x}" y="{TOP + ph + 16}" text-anchor="middle">{_tick_label(t)}</text>')
    if x_label:
        out.append(
            f'<text x="{LEFT + pw / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle">{escape(x_label)}</text>'
        )
    if y_label:
        out.append(
            f'<text x="16" y="{TOP + ph / 2:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 16 {TOP + ph / 2:.1f})">{escape(y_label)}</text>'
        )
    if hline is not None:
        y = _f(py(hline))
        out.append(
            f'<line x1="{LEFT}" y1="{y}" x2="{LEFT + pw}" y2="{y}" stroke="#808080" stroke-width="0.8"/>'
        )
    if vline is not None:
        x = _f(px(vline))
        out.append(
            f'<line x1="{x}" y1="{TOP}" x2="{x}" y2="{TOP + ph}" stroke="#808080" '
            f'stroke-width="1" stroke-dasharray="2 3"/>'
        )

    ordered = sorted(range(len(series)), key=lambda i: (_LAYER[series[i].role], i))
    for i in ordered:
        s = series[i]
        pts = " ".join(
            f"{_f(px(float(x)))},{_f(py(float(y)))}" for x, y in zip(s.x, s.y) if math.isfinite(y)
        )
        style = " ".join(f'{k}="{v}"' for k, v in STYLES[s.role].items())
        out.append(
            f'<polyline data-label={quoteattr(s.label)} data-role="{s.role}" fill="none" {style} '
            f'points="{pts}"/>'
        )

    legend = [s for s in series if s.role != "placebo"]
    if any(s.role == "placebo" for s in series):
        legend.append(Series("placebos", [0], [0], "placebo"))
    for k, s in enumerate(legend):
        y = TOP + 10 + 18 * k
        x0 = LEFT + pw + 12
        style = " ".join(f'{a}="{b}"' for a, b in STYLES[s.role].items())
        out.append(f'<line x1="{x0}" y1="{y}" x2="{x0 + 24}" y2="{y}" {style}/>')
        out.append(f'<text x="{x0 + 30}" y="{y + 4}">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_bar_svg(
    labels: Sequence[str],
    values: Sequence[float],
    highlight: str | None = None,
    title: str = "",
    y_label: str = "",
) -> str:
    """Vertical bar chart; infinite values are drawn at the top and marked 'inf'."""
    if not labels:
        raise EmptySeries("nothing to plot")
    if len(labels) != len(values):
        raise ValueError("labels and values lengths differ")
    finite = [v for v in values if math.isfinite(v)]
    top = max([0.0, *finite])
    top = top * 1.15 if top > 0 else 1.0
    pw, ph = WIDTH - LEFT - 30, HEIGHT - TOP - BOTTOM - 30
    slot = pw / len(labels)
    bar = slot * 0.7
    out = _header(title)
    base = TOP + ph
    out.append(f'<line x1="{LEFT}" y1="{base}" x2="{LEFT + pw}" y2="{base}" stroke="#000000"/>')
    out.append(f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{base}" stroke="#000000"/>')
    for t in _nice_ticks(0.0, top):
        y = _f(base - t / top * ph)
        out.append(f'<line x1="{LEFT - 4}" y1="{y}" x2="{LEFT}" y2="{y}" stroke="#000000"/>')
        out.append(f'<text x="{LEFT - 6}" y="{y}" text-anchor="end" dy="4">{_tick_label(t)}</text>')
    if y_label:
        out.append(
            f'<text x="16" y="{TOP + ph / 2:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 16 {TOP + ph / 2:.1f})">{escape(y_label)}</text>'
        )
    for k, (label, v) in enumerate(zip(labels, values)):
        h = ph if not math.isfinite(v) else max(v, 0.0) / top * ph
        x = LEFT + k * slot + (slot - bar) / 2
        fill = "#000000" if label == highlight else "#a0a0a0"
        out.append(
            f'<rect data-label={quoteattr(label)} x="{_f(x)}" y="{_f(base - h)}" '
            f'width="{_f(bar)}" height="{_f(h)}" fill="{fill}"/>'
        )
        if not math.isfinite(v):
            out.append(f'<text x="{_f(x + bar / 2)}" y="{_f(base - h - 3)}" text-anchor="middle">inf</text>')
        cx, cy = _f(x + bar / 2), _f(base + 8)
        out.append(
            f'<text x="{cx}" y="{cy}" text-anchor="end" transform="rotate(-60 {cx} {cy})">{escape(label)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
