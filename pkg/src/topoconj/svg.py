"""Minimal SVG 1.1 plot writer: axes, one polyline, point markers."""

from __future__ import annotations

from typing import Iterable, Sequence
from xml.sax.saxutils import escape

PAD = 0.05


def _fmt(v: float) -> str:
    return f"{v:.9g}"


def plot_svg(
    xs: Sequence[float],
    ys: Sequence[float],
    markers: Iterable[tuple[float, float]] = (),
    title: str = "",
    size: int = 480,
) -> str:
    """Render ``(xs, ys)`` as a polyline in data coordinates.

    The viewBox is the data bounding box padded by 5% on each side; y is
    flipped so that up is positive.
    """
    markers = list(markers)
    px = list(xs) + [m[0] for m in markers]
    py = list(ys) + [m[1] for m in markers]
    x0, x1 = min(px), max(px)
    y0, y1 = min(py), max(py)
    w = (x1 - x0) or 1.0
    h = (y1 - y0) or 1.0
    x0, x1 = x0 - PAD * w, x1 + PAD * w
    y0, y1 = y0 - PAD * h, y1 + PAD * h
    vb = f"{_fmt(x0)} {_fmt(-y1)} {_fmt(x1 - x0)} {_fmt(y1 - y0)}"
    r = 0.008 * max(x1 - x0, y1 - y0)
    # axes through the origin when visible, else along the lower-left edges
    ax = 0.0 if x0 <= 0.0 <= x1 else x0
    ay = 0.0 if y0 <= 0.0 <= y1 else y0
    pts = " ".join(f"{_fmt(x)},{_fmt(-y)}" for x, y in zip(xs, ys))
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" '
        f'viewBox="{vb}" preserveAspectRatio="none">',
    ]
    if title:
        out.append(f"<title>{escape(title)}</title>")
    line = 'stroke="#888" stroke-width="1" vector-effect="non-scaling-stroke"'
    out.append(f'<line x1="{_fmt(x0)}" y1="{_fmt(-ay)}" x2="{_fmt(x1)}" y2="{_fmt(-ay)}" {line}/>')
    out.append(f'<line x1="{_fmt(ax)}" y1="{_fmt(-y0)}" x2="{_fmt(ax)}" y2="{_fmt(-y1)}" {line}/>')
    out.append(
        f'<polyline points="{pts}" fill="none" stroke="#1f4e9c" stroke-width="1.5" '
        'vector-effect="non-scaling-stroke"/>'
    )
    for mx, my in markers:
        out.append(f'<circle cx="{_fmt(mx)}" cy="{_fmt(-my)}" r="{_fmt(r)}" fill="#c0392b"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, xs, ys, markers=(), title: str = "") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(plot_svg(xs, ys, markers, title))
