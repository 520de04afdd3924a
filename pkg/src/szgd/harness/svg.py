"""Deterministic SVG line charts with a log-scale y-axis and +-1 std bands.

Built on string formatting alone so the output is byte-stable across runs
and does not depend on a plotting library or its fonts.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

from .aggregate import AggregateStats

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 130, 30, 50
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2")
MAX_POINTS = 400
_TINY = 1e-300


def _pick(stats: AggregateStats, kind: str) -> tuple[np.ndarray, np.ndarray]:
    if kind == "fvalue":
        return stats.mean_f, stats.std_f
    if kind == "distance":
        return stats.mean_dist, stats.std_dist
    raise ValueError(f"kind must be 'fvalue' or 'distance', got {kind!r}")


def _xs(stats: AggregateStats, x_axis: str) -> np.ndarray:
    if x_axis == "iterations":
        return stats.t.astype(float)
    if x_axis == "evaluations":
        return stats.evals.astype(float)
    raise ValueError(f"x_axis must be 'iterations' or 'evaluations', got {x_axis!r}")


def _subsample(m: int) -> np.ndarray:
    if m <= MAX_POINTS:
        return np.arange(m)
    return np.unique(np.linspace(0, m - 1, MAX_POINTS).round().astype(int))


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def emit_figure(series, kind: str = "fvalue", x_axis: str = "iterations", title: str = "") -> str:
    """Render one line per :class:`AggregateStats` with a shaded +-1 std band.

    ``series`` is a single ``AggregateStats`` or a sequence of them; their
    ``label`` fields become the legend. The lower band edge is clipped to
    the smallest positive value on the plot so the log axis stays finite.
    """
    if isinstance(series, AggregateStats):
        series = [series]
    series = list(series)
    if not series or any(len(s) == 0 for s in series):
        raise ValueError("emit_figure needs nonempty statistics")

    curves = []
    for s in series:
        mean, std = _pick(s, kind)
        idx = _subsample(len(s))
        curves.append((s.label, _xs(s, x_axis)[idx], mean[idx], std[idx]))

    pos = np.concatenate([np.concatenate([m, m + sd]) for _, _, m, sd in curves])
    pos = pos[np.isfinite(pos) & (pos > _TINY)]
    if pos.size == 0:
        lo_y, hi_y = 1e-1, 1e1
    else:
        lo_y, hi_y = float(pos.min()), float(pos.max())
    e_lo, e_hi = math.floor(math.log10(lo_y)), math.ceil(math.log10(hi_y))
    if e_hi <= e_lo:
        e_lo, e_hi = e_lo - 1, e_hi + 1
    floor = 10.0**e_lo
    x_max = max(float(c[1].max()) for c in curves) or 1.0

    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def X(v):
        return MARGIN_L + pw * (v / x_max)

    def Y(v):
        v = max(float(v), floor) if np.isfinite(v) else floor
        return MARGIN_T + ph * (e_hi - math.log10(v)) / (e_hi - e_lo)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{WIDTH / 2:.1f}" y="18" text-anchor="middle">{escape(title)}</text>')
    # axes and decade ticks
    out.append(f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" '
               f'fill="none" stroke="black"/>')
    step = max(1, (e_hi - e_lo) // 8)
    for e in range(e_lo, e_hi + 1, step):
        y = Y(10.0**e)
        out.append(f'<line x1="{MARGIN_L - 4}" y1="{_fmt(y)}" x2="{MARGIN_L}" y2="{_fmt(y)}" stroke="black"/>')
        out.append(f'<text x="{MARGIN_L - 8}" y="{_fmt(y + 4)}" text-anchor="end">1e{e}</text>')
    for i in range(6):
        v = x_max * i / 5
        x = X(v)
        out.append(f'<line x1="{_fmt(x)}" y1="{MARGIN_T + ph}" x2="{_fmt(x)}" y2="{MARGIN_T + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{_fmt(x)}" y="{MARGIN_T + ph + 18}" text-anchor="middle">{v:g}</text>')
    xlabel = "iteration t" if x_axis == "iterations" else "function evaluations"
    ylabel = "f(x_t) - f*" if kind == "fvalue" else "|x_t - x*|"
    out.append(f'<text x="{MARGIN_L + pw / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="16" y="{MARGIN_T + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {MARGIN_T + ph / 2:.1f})">{escape(ylabel)}</text>')

    for i, (label, xs, mean, std) in enumerate(curves):
        color = PALETTE[i % len(PALETTE)]
        upper = [f"{_fmt(X(x))},{_fmt(Y(m + s))}" for x, m, s in zip(xs, mean, std)]
        lower = [f"{_fmt(X(x))},{_fmt(Y(m - s))}" for x, m, s in zip(xs[::-1], mean[::-1], std[::-1])]
        out.append(f'<polygon points="{" ".join(upper + lower)}" fill="{color}" '
                   f'fill-opacity="0.2" stroke="none"/>')
        line = " ".join(f"{_fmt(X(x))},{_fmt(Y(m))}" for x, m in zip(xs, mean))
        out.append(f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = MARGIN_T + 14 + 18 * i
        lx = WIDTH - MARGIN_R + 10
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
