"""Minimal deterministic SVG line plots."""
from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .errors import ConfigError

__all__ = ["Series", "emit_plot", "render_svg"]

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 170, 30, 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")


@dataclass(frozen=True)
class Series:
    label: str
    x: tuple
    y: tuple


def _as_series(s):
    if isinstance(s, Series):
        return s
    label, x, y = s
    return Series(str(label), tuple(float(v) for v in x), tuple(float(v) for v in y))


def _fmt(v):
    return f"{v:.2f}"


def _tick(v):
    return f"{v:.3g}"


def render_svg(series, title="", xlabel="t", ylabel="", logy=False):
    """SVG text for a list of Series or (label, x, y) triples."""
    series = [_as_series(s) for s in series]
    if not series:
        raise ConfigError("emit_plot needs at least one series")
    for s in series:
        if len(s.x) == 0 or len(s.x) != len(s.y):
            raise ConfigError(f"series {s.label!r} is empty or ragged")
    xs = np.concatenate([np.asarray(s.x) for s in series])
    ys = np.concatenate([np.asarray(s.y) for s in series])
    if logy:
        pos = ys[ys > 0]
        if pos.size == 0:
            raise ConfigError("log-scale plot needs positive values")
        ylo, yhi = math.log10(pos.min()), math.log10(pos.max())
    else:
        ylo, yhi = float(np.nanmin(ys)), float(np.nanmax(ys))
    xlo, xhi = float(np.nanmin(xs)), float(np.nanmax(xs))
    if xhi == xlo:
        xhi = xlo + 1.0
    if yhi == ylo:
        yhi = ylo + 1.0
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(v):
        return LEFT + (v - xlo) / (xhi - xlo) * pw

    def py(v):
        if logy:
            v = math.log10(v)
        return TOP + ph - (v - ylo) / (yhi - ylo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if title:
        out.append(f'<text x="{LEFT + pw / 2:.2f}" y="18" text-anchor="middle" '
                   f'font-size="14">{escape(title)}</text>')
    for i in range(5):
        fx = xlo + (xhi - xlo) * i / 4
        fy = ylo + (yhi - ylo) * i / 4
        X = LEFT + pw * i / 4
        Y = TOP + ph - ph * i / 4
        out.append(f'<line x1="{_fmt(X)}" y1="{TOP + ph}" x2="{_fmt(X)}" y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(X)}" y="{TOP + ph + 18}" text-anchor="middle" font-size="11">{_tick(fx)}</text>')
        out.append(f'<line x1="{LEFT - 5}" y1="{_fmt(Y)}" x2="{LEFT}" y2="{_fmt(Y)}" stroke="black"/>')
        lab = _tick(10 ** fy) if logy else _tick(fy)
        out.append(f'<text x="{LEFT - 8}" y="{_fmt(Y + 4)}" text-anchor="end" font-size="11">{lab}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.2f}" y="{HEIGHT - 10}" text-anchor="middle" '
               f'font-size="12">{escape(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="16" y="{TOP + ph / 2:.2f}" text-anchor="middle" font-size="12" '
                   f'transform="rotate(-90 16 {TOP + ph / 2:.2f})">{escape(ylabel)}</text>')
    for n, s in enumerate(series):
        color = COLORS[n % len(COLORS)]
        pts = [(a, b) for a, b in zip(s.x, s.y) if math.isfinite(a) and math.isfinite(b) and (b > 0 or not logy)]
        path = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in pts)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{path}"/>')
        ly = TOP + 10 + 18 * n
        lx = LEFT + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}" font-size="11">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(series, path, title="", xlabel="t", ylabel="", logy=False):
    """Write the plot to ``path``; identical inputs give identical bytes."""
    text = render_svg(series, title, xlabel, ylabel, logy)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path
