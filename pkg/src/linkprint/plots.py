"""Minimal standalone SVG charts (line, scatter, strip).

Output is plain text with fixed-precision coordinates, so identical
inputs give byte-identical files.
"""

from __future__ import annotations

import math
from html import escape

W, H = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 150, 40, 60
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
           "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def _f(x):
    return f"{x:.2f}"


class _Frame:
    """Maps data coordinates into the plot area."""

    def __init__(self, xs, ys, logx=False):
        self.logx = logx and all(x > 0 for x in xs)
        tx = [self._tx(x) for x in xs] or [0.0, 1.0]
        self.x0, self.x1 = min(tx), max(tx)
        if self.x1 == self.x0:
            self.x0, self.x1 = self.x0 - 1, self.x1 + 1
        ys = list(ys) or [0.0, 1.0]
        self.y0, self.y1 = min(ys), max(ys)
        if self.y1 == self.y0:
            self.y0, self.y1 = self.y0 - 0.5, self.y1 + 0.5
        pad = 0.05 * (self.y1 - self.y0)
        self.y0 -= pad
        self.y1 += pad

    def _tx(self, x):
        return math.log10(x) if self.logx else float(x)

    def px(self, x):
        return LEFT + (self._tx(x) - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)

    def py(self, y):
        return H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)


def _header(title, xlabel, ylabel):
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<line x1="{LEFT}" y1="{H - BOTTOM}" x2="{W - RIGHT}" y2="{H - BOTTOM}" stroke="black"/>',
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{H - BOTTOM}" stroke="black"/>',
        f'<text x="{(LEFT + W - RIGHT) / 2}" y="{H - 15}" text-anchor="middle">'
        f'{escape(xlabel)}</text>',
        f'<text x="18" y="{(TOP + H - BOTTOM) / 2}" text-anchor="middle" '
        f'transform="rotate(-90 18 {(TOP + H - BOTTOM) / 2})">{escape(ylabel)}</text>',
    ]


def _yticks(frame, n=5):
    out = []
    for i in range(n + 1):
        y = frame.y0 + (frame.y1 - frame.y0) * i / n
        py = frame.py(y)
        out.append(f'<line x1="{LEFT - 4}" y1="{_f(py)}" x2="{LEFT}" y2="{_f(py)}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 7}" y="{_f(py + 4)}" text-anchor="end">{y:.3g}</text>')
    return out


def _xticks(frame, values, labels=None):
    out = []
    for i, x in enumerate(values):
        px = frame.px(x)
        label = labels[i] if labels else f"{x:g}"
        out.append(f'<line x1="{_f(px)}" y1="{H - BOTTOM}" x2="{_f(px)}" y2="{H - BOTTOM + 4}" '
                   f'stroke="black"/>')
        out.append(f'<text x="{_f(px)}" y="{H - BOTTOM + 18}" text-anchor="middle">'
                   f'{escape(str(label))}</text>')
    return out


def _legend(names):
    out = []
    for i, name in enumerate(names):
        y = TOP + 10 + 18 * i
        color = PALETTE[i % len(PALETTE)]
        out.append(f'<rect x="{W - RIGHT + 15}" y="{y - 9}" width="12" height="12" '
                   f'fill="{color}"/>')
        out.append(f'<text x="{W - RIGHT + 33}" y="{y + 1}">{escape(str(name))}</text>')
    return out


def line_chart(series, title="", xlabel="", ylabel="", logx=False, xticks=None):
    """`series` maps a name to a list of (x, y); one polyline per name."""
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    frame = _Frame(xs, ys, logx)
    parts = _header(title, xlabel, ylabel) + _yticks(frame)
    ticks = sorted(set(xs))
    parts += _xticks(frame, ticks, xticks if xticks and len(xticks) == len(ticks) else None)
    for i, (name, pts) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{_f(frame.px(x))},{_f(frame.py(y))}" for x, y in pts)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                     f'stroke-width="2"/>')
        for x, y in pts:
            parts.append(f'<circle cx="{_f(frame.px(x))}" cy="{_f(frame.py(y))}" r="3" '
                         f'fill="{color}"/>')
    parts += _legend(series.keys())
    return "\n".join(parts + ["</svg>"]) + "\n"


def scatter(points, labels, title=""):
    """2-D points coloured by label."""
    classes = list(dict.fromkeys(labels))
    frame = _Frame([p[0] for p in points], [p[1] for p in points])
    parts = _header(title, "dim 1", "dim 2") + _yticks(frame)
    for (x, y), lab in zip(points, labels):
        color = PALETTE[classes.index(lab) % len(PALETTE)]
        parts.append(f'<circle cx="{_f(frame.px(x))}" cy="{_f(frame.py(y))}" r="3" '
                     f'fill="{color}" fill-opacity="0.75"/>')
    parts += _legend(classes)
    return "\n".join(parts + ["</svg>"]) + "\n"


def strip_chart(groups, title="", ylabel=""):
    """One column of points per group, with the group mean as a bar."""
    names = list(groups)
    ys = [y for vals in groups.values() for y in vals]
    frame = _Frame(list(range(len(names))) or [0], ys)
    frame.x0, frame.x1 = -0.75, len(names) - 0.25
    parts = _header(title, "", ylabel) + _yticks(frame)
    parts += _xticks(frame, list(range(len(names))), names)
    for i, name in enumerate(names):
        vals = groups[name]
        color = PALETTE[i % len(PALETTE)]
        for j, y in enumerate(vals):
            dx = 0.25 * ((j % 7) - 3) / 3
            parts.append(f'<circle cx="{_f(frame.px(i + dx))}" cy="{_f(frame.py(y))}" r="3" '
                         f'fill="{color}"/>')
        if vals:
            mean = sum(vals) / len(vals)
            parts.append(f'<line x1="{_f(frame.px(i - 0.35))}" y1="{_f(frame.py(mean))}" '
                         f'x2="{_f(frame.px(i + 0.35))}" y2="{_f(frame.py(mean))}" '
                         f'stroke="black" stroke-width="2"/>')
    return "\n".join(parts + ["</svg>"]) + "\n"
