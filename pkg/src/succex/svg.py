"""Minimal deterministic SVG line/scatter charts (no plotting dependency)."""
from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")
W, H = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 160, 40, 55


@dataclass
class Layer:
    label: str
    x: np.ndarray
    y: np.ndarray
    kind: str = "line"  # line, points, band (y holds (low, high) columns), errorbar (likewise)
    color: str | None = None
    dashed: bool = False


def _ticks(lo, hi, n=5):
    if not np.isfinite(lo) or not np.isfinite(hi):
        return []
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    start = np.ceil(lo / step) * step
    return [float(v) for v in np.arange(start, hi + step * 1e-9, step)]


def _num(v):
    return f"{v:.2f}"


def _label(v):
    return format(v, ".4g")


def chart(layers, title="", xlabel="", ylabel="", logx=False) -> str:
    """Render layers to an SVG document string."""
    xs, ys = [], []
    for layer in layers:
        x = np.asarray(layer.x, dtype=float)
        y = np.asarray(layer.y, dtype=float)
        xs.append(np.log10(x[x > 0]) if logx else x)
        ys.append(y.ravel())
    allx = np.concatenate(xs) if xs else np.array([0.0, 1.0])
    ally = np.concatenate(ys) if ys else np.array([0.0, 1.0])
    allx, ally = allx[np.isfinite(allx)], ally[np.isfinite(ally)]
    if allx.size == 0:
        allx = np.array([0.0, 1.0])
    if ally.size == 0:
        ally = np.array([0.0, 1.0])
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = float(ally.min()), float(ally.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def px(x):
        x = np.log10(x) if logx else x
        return LEFT + (x - x0) / (x1 - x0) * pw

    def py(y):
        return TOP + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" '
           'font-family="sans-serif" font-size="11">',
           f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
           f'<text x="{W / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for tv in _ticks(x0, x1):
        X = LEFT + (tv - x0) / (x1 - x0) * pw
        text = _label(10 ** tv) if logx else _label(tv)
        out.append(f'<line x1="{_num(X)}" y1="{TOP + ph}" x2="{_num(X)}" y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_num(X)}" y="{TOP + ph + 18}" text-anchor="middle">{text}</text>')
    for tv in _ticks(y0, y1):
        Y = py(tv)
        out.append(f'<line x1="{LEFT - 5}" y1="{_num(Y)}" x2="{LEFT}" y2="{_num(Y)}" stroke="black"/>')
        out.append(f'<line x1="{LEFT}" y1="{_num(Y)}" x2="{LEFT + pw}" y2="{_num(Y)}" stroke="#e5e5e5"/>')
        out.append(f'<text x="{LEFT - 8}" y="{_num(Y + 4)}" text-anchor="end">{_label(tv)}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{H - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{TOP + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {TOP + ph / 2:.1f})">{escape(ylabel)}</text>')

    for i, layer in enumerate(layers):
        color = layer.color or PALETTE[i % len(PALETTE)]
        x = np.asarray(layer.x, dtype=float)
        y = np.asarray(layer.y, dtype=float)
        ok = np.isfinite(x) & (x > 0 if logx else True)
        if layer.kind in ("band", "errorbar"):
            ok &= np.all(np.isfinite(y), axis=1)
            x, lo, hi = x[ok], y[ok, 0], y[ok, 1]
            if layer.kind == "band" and len(x):
                pts = [f"{_num(px(a))},{_num(py(b))}" for a, b in zip(x, hi)]
                pts += [f"{_num(px(a))},{_num(py(b))}" for a, b in zip(x[::-1], lo[::-1])]
                out.append(f'<polygon points="{" ".join(pts)}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
            else:
                for a, b, c in zip(x, lo, hi):
                    out.append(f'<line x1="{_num(px(a))}" y1="{_num(py(b))}" x2="{_num(px(a))}" '
                               f'y2="{_num(py(c))}" stroke="{color}"/>')
        else:
            ok &= np.isfinite(y)
            x, y = x[ok], y[ok]
            if layer.kind == "line" and len(x) > 1:
                pts = " ".join(f"{_num(px(a))},{_num(py(b))}" for a, b in zip(x, y))
                dash = ' stroke-dasharray="5,3"' if layer.dashed else ""
                out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>')
            else:
                for a, b in zip(x, y):
                    out.append(f'<circle cx="{_num(px(a))}" cy="{_num(py(b))}" r="2.5" fill="{color}"/>')
        ly = TOP + 12 + 16 * i
        out.append(f'<rect x="{W - RIGHT + 12}" y="{ly - 8}" width="10" height="10" fill="{color}"/>')
        out.append(f'<text x="{W - RIGHT + 28}" y="{ly + 1}">{escape(layer.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
