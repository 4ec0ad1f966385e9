"""SVG output in the uniform study style: grey ribbons, blue entities."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .layout import LayoutGeometry, Ribbon


@dataclass(frozen=True)
class RenderStyle:
    entity_fill: str = "#4C78A8"
    flow_fill: str = "#B0B0B0"
    flow_opacity: float = 0.6
    background: str = "#FFFFFF"
    width: int = 1920
    height: int = 1080


def _num(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"non-finite coordinate {x!r}")
    s = f"{x:.3f}".rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


def ribbon_path(r: Ribbon) -> str:
    """Closed band between two vertical segments.

    Both edges are cubic Beziers whose control points sit at the horizontal
    midpoint, so the ribbon leaves and enters its entities horizontally.
    """
    x0, x1 = r.source_x, r.target_x
    xm = (x0 + x1) / 2
    y0, y1, h = r.source_y, r.target_y, r.thickness
    n = _num
    return (
        f"M{n(x0)},{n(y0)}"
        f"C{n(xm)},{n(y0)} {n(xm)},{n(y1)} {n(x1)},{n(y1)}"
        f"L{n(x1)},{n(y1 + h)}"
        f"C{n(xm)},{n(y1 + h)} {n(xm)},{n(y0 + h)} {n(x0)},{n(y0 + h)}"
        "Z"
    )


def render_svg(geometry: LayoutGeometry, style: RenderStyle = RenderStyle()) -> str:
    """SVG document text: one ``<rect>`` per entity, one ``<path>`` per flow."""
    w, h = style.width, style.height
    if (geometry.width, geometry.height) != (w, h):
        raise ValueError(f"layout canvas {geometry.width}x{geometry.height} does not match style {w}x{h}")
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}" style="background-color:{style.background}">',
        f'<g fill="{style.flow_fill}" fill-opacity="{_num(style.flow_opacity)}" stroke="none">',
    ]
    lines += [f'<path d="{ribbon_path(r)}"/>' for r in geometry.flow_ribbons]
    lines.append("</g>")
    lines.append(f'<g fill="{style.entity_fill}" stroke="none">')
    for column in geometry.entity_rects:
        for r in column:
            lines.append(
                f'<rect x="{_num(r.x)}" y="{_num(r.y)}" width="{_num(r.width)}" height="{_num(r.height)}"/>'
            )
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
