"""Static SVG rate-quality charts with confidence-interval error bars.

Hand-rolled SVG so the output is small, deterministic, and structurally
checkable: one <polyline class="curve"> per variant and one
<g class="errorbar"> per plotted point. The rate axis is log-scaled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

WIDTH, HEIGHT = 720, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 72, 24, 40, 56
COLORS = ("#1f6fb2", "#d1495b", "#3a7d44", "#8d5a97")
CAP = 4.0  # half-width of error-bar caps, px


@dataclass(frozen=True)
class CurveSeries:
    """One plotted variant: label plus (rate_kbps, quality, ci95) points."""

    label: str
    points: tuple[tuple[float, float, float], ...]


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 10))
        t += step
    return ticks


def _log_ticks(lo: float, hi: float) -> list[float]:
    ticks = []
    k = math.floor(math.log10(lo))
    while 10.0**k <= hi:
        for mult in (1.0, 2.0, 5.0):
            v = mult * 10.0**k
            if lo <= v <= hi:
                ticks.append(v)
        k += 1
    return ticks or [lo, hi]


def render_rq_svg(clip: str, series: list[CurveSeries], metric_id: str = "quality") -> str:
    """Render one clip's rate-quality chart to an SVG string."""
    if not series:
        raise ValueError("no series to plot")
    rates = [p[0] for s in series for p in s.points]
    quals = [p[1] for s in series for p in s.points]
    cis = [p[2] for s in series for p in s.points]
    x_lo, x_hi = min(rates), max(rates)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo * 0.9, x_hi * 1.1
    y_lo = min(q - c for q, c in zip(quals, cis))
    y_hi = max(q + c for q, c in zip(quals, cis))
    mos_like = "mos" in metric_id.lower()
    if mos_like:
        # opinion scores plot on the [0, 100] scale; bars clamp to it
        y_lo, y_hi = max(0.0, y_lo), min(100.0, max(y_hi, 1.0))
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    lx_lo, lx_hi = math.log10(x_lo), math.log10(x_hi)
    if lx_hi == lx_lo:
        lx_hi = lx_lo + 1.0
    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B

    def px(rate: float) -> float:
        return MARGIN_L + (math.log10(rate) - lx_lo) / (lx_hi - lx_lo) * plot_w

    def py(q: float) -> float:
        return MARGIN_T + (y_hi - q) / (y_hi - y_lo) * plot_h

    parts: list[str] = []
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">'
    )
    parts.append(f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
    parts.append(
        f'<text x="{WIDTH / 2:.0f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{clip}</text>'
    )
    axis_y = MARGIN_T + plot_h
    parts.append(
        f'<line x1="{MARGIN_L}" y1="{axis_y}" x2="{MARGIN_L + plot_w}" y2="{axis_y}" '
        f'stroke="black"/>'
    )
    parts.append(
        f'<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{axis_y}" stroke="black"/>'
    )
    for v in _log_ticks(x_lo, x_hi):
        x = px(v)
        parts.append(
            f'<line x1="{_fmt(x)}" y1="{axis_y}" x2="{_fmt(x)}" y2="{axis_y + 5}" stroke="black"/>'
        )
        label = f"{v:g}"
        parts.append(
            f'<text x="{_fmt(x)}" y="{axis_y + 20}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{label}</text>'
        )
    for v in _nice_ticks(y_lo, y_hi):
        y = py(v)
        parts.append(
            f'<line x1="{MARGIN_L - 5}" y1="{_fmt(y)}" x2="{MARGIN_L}" y2="{_fmt(y)}" '
            f'stroke="black"/>'
        )
        parts.append(
            f'<text x="{MARGIN_L - 9}" y="{_fmt(y + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{v:g}</text>'
        )
    parts.append(
        f'<text x="{MARGIN_L + plot_w / 2:.0f}" y="{HEIGHT - 14}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">rate (kbps, log scale)</text>'
    )
    parts.append(
        f'<text x="18" y="{MARGIN_T + plot_h / 2:.0f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 18 {MARGIN_T + plot_h / 2:.0f})">{metric_id}</text>'
    )

    for idx, s in enumerate(series):
        color = COLORS[idx % len(COLORS)]
        pts = sorted(s.points)
        coords = " ".join(f"{_fmt(px(r))},{_fmt(py(q))}" for r, q, _ in pts)
        for r, q, ci in pts:
            x = px(r)
            top = py(min(q + ci, y_hi))
            bot = py(max(q - ci, y_lo))
            parts.append(f'<g class="errorbar" stroke="{color}">')
            parts.append(
                f'<line x1="{_fmt(x)}" y1="{_fmt(top)}" x2="{_fmt(x)}" y2="{_fmt(bot)}"/>'
            )
            parts.append(
                f'<line x1="{_fmt(x - CAP)}" y1="{_fmt(top)}" x2="{_fmt(x + CAP)}" y2="{_fmt(top)}"/>'
            )
            parts.append(
                f'<line x1="{_fmt(x - CAP)}" y1="{_fmt(bot)}" x2="{_fmt(x + CAP)}" y2="{_fmt(bot)}"/>'
            )
            parts.append("</g>")
        parts.append(
            f'<polyline class="curve" fill="none" stroke="{color}" stroke-width="1.5" '
            f'points="{coords}"/>'
        )
        for r, q, _ in pts:
            parts.append(
                f'<circle class="marker" cx="{_fmt(px(r))}" cy="{_fmt(py(q))}" r="2.5" '
                f'fill="{color}"/>'
            )
        ly = MARGIN_T + 14 + 16 * idx
        lx = MARGIN_L + plot_w - 150
        parts.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{lx + 28}" y="{ly}" font-family="sans-serif" font-size="12">{s.label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
