"""Column-constrained layout: ordering, pixel geometry and crossing counts.

Ordering follows the d3-sankey relaxation loop: entity centres are pulled
toward the value-weighted mean centre of their neighbours, sweeping left to
right and then right to left, with collisions resolved after every column.
After each sweep the resulting vertical order is scored by its crossing count
and only strict improvements replace the best ordering seen so far, so the
identity ordering is never beaten by a worse one.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .core import (
    AlluvialDataset,
    count_crossings,
    identity_orderings,
    validate_orderings,
)
from .errors import InvalidDataset, LayoutOverflow

__all__ = [
    "LayoutConfig",
    "LayoutGeometry",
    "Rect",
    "Ribbon",
    "assign_geometry",
    "count_crossings",
    "layout",
    "order_columns",
    "vertical_scale",
]


@dataclass(frozen=True)
class LayoutConfig:
    canvas_width_px: float = 1920
    canvas_height_px: float = 1080
    node_width_px: float = 20
    node_padding_px: float = 12
    relaxation_iterations: int = 6
    margin_px: float = 30

    def __post_init__(self):
        for name in ("canvas_width_px", "canvas_height_px", "node_width_px", "node_padding_px"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.margin_px < 0 or self.relaxation_iterations < 0:
            raise ValueError("margin_px and relaxation_iterations must be non-negative")


@dataclass(frozen=True)
class Rect:
    x: float
    y: float
    width: float
    height: float


@dataclass(frozen=True)
class Ribbon:
    source_x: float
    source_y: float
    target_x: float
    target_y: float
    thickness: float


@dataclass(frozen=True)
class LayoutGeometry:
    width: float
    height: float
    entity_rects: tuple[tuple[Rect, ...], ...]
    flow_ribbons: tuple[Ribbon, ...]
    orderings: tuple[tuple[int, ...], ...]

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "entity_rects": [[asdict(r) for r in col] for col in self.entity_rects],
            "flow_ribbons": [asdict(r) for r in self.flow_ribbons],
            "orderings": [list(o) for o in self.orderings],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "LayoutGeometry":
        try:
            return cls(
                data["width"],
                data["height"],
                tuple(tuple(Rect(**r) for r in col) for col in data["entity_rects"]),
                tuple(Ribbon(**r) for r in data["flow_ribbons"]),
                tuple(tuple(o) for o in data["orderings"]),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidDataset(f"malformed layout document: {exc!r}") from exc


def usable_height(n_entities: int, config: LayoutConfig) -> float:
    return config.canvas_height_px - 2 * config.margin_px - (n_entities - 1) * config.node_padding_px


def vertical_scale(columns, column_totals, config: LayoutConfig) -> float:
    """Pixels per flow unit, shared by every column (the tightest one wins)."""
    scales = []
    for n, total in zip(columns, column_totals):
        room = usable_height(n, config)
        if room <= 0:
            raise LayoutOverflow(
                f"{n} entities with {config.node_padding_px}px padding do not fit in "
                f"{config.canvas_height_px}px"
            )
        scales.append(room / total)
    return min(scales)


def _neighbours(dataset: AlluvialDataset):
    incoming = [[[] for _ in range(n)] for n in dataset.columns]
    outgoing = [[[] for _ in range(n)] for n in dataset.columns]
    for i, fl in enumerate(dataset.flows):
        outgoing[fl.source.column][fl.source.slot].append(i)
        incoming[fl.target.column][fl.target.slot].append(i)
    return incoming, outgoing


def _resolve_collisions(y0, heights, top, bottom, pad):
    order = np.lexsort((np.arange(len(y0)), y0))
    y = top
    for k in order:
        if y0[k] < y:
            y0[k] = y
        y = y0[k] + heights[k] + pad
    # push back up from the bottom edge
    y = bottom
    for k in order[::-1]:
        if y0[k] + heights[k] > y:
            y0[k] = y - heights[k]
        y = y0[k] - pad
    return order


def order_columns(dataset: AlluvialDataset, config: LayoutConfig = LayoutConfig()) -> list[list[int]]:
    """Per-column slot orderings (top to bottom) from barycenter relaxation."""
    totals = dataset.entity_totals()
    ky = vertical_scale(dataset.columns, [t.sum() for t in totals], config)
    heights = [t * ky for t in totals]
    top = config.margin_px
    bottom = config.canvas_height_px - config.margin_px
    pad = config.node_padding_px

    y0 = []
    for h in heights:
        col = np.empty(len(h))
        col[:] = top + np.concatenate(([0.0], np.cumsum(h + pad)[:-1]))
        y0.append(col)

    incoming, outgoing = _neighbours(dataset)
    flows = dataset.flows

    best = identity_orderings(dataset)
    best_crossings = count_crossings(dataset, best)
    if best_crossings == 0:
        return best

    def relax(c, links, endpoint, alpha):
        centre = y0[c] + heights[c] / 2
        for k in range(dataset.columns[c]):
            ids = links[c][k]
            if not ids:
                continue
            w = np.array([flows[i].value for i in ids], dtype=float)
            other = [getattr(flows[i], endpoint) for i in ids]
            nb = np.array([y0[r.column][r.slot] + heights[r.column][r.slot] / 2 for r in other])
            target = float(w @ nb / w.sum())
            y0[c][k] += (target - centre[k]) * alpha
        return _resolve_collisions(y0[c], heights[c], top, bottom, pad)

    n_cols = len(dataset.columns)
    for it in range(config.relaxation_iterations):
        alpha = 0.99**it
        for columns, links, endpoint in (
            (range(1, n_cols), incoming, "source"),
            (range(n_cols - 2, -1, -1), outgoing, "target"),
        ):
            for c in columns:
                relax(c, links, endpoint, alpha)
            candidate = [np.lexsort((np.arange(n), y0[c])).tolist() for c, n in enumerate(dataset.columns)]
            crossings = count_crossings(dataset, candidate)
            if crossings < best_crossings:
                best, best_crossings = candidate, crossings
                if crossings == 0:
                    return best
    return best


def assign_geometry(
    dataset: AlluvialDataset, orderings, config: LayoutConfig = LayoutConfig()
) -> LayoutGeometry:
    positions = validate_orderings(dataset, orderings)
    n_cols = len(dataset.columns)
    span = config.canvas_width_px - 2 * config.margin_px - config.node_width_px
    step = span / (n_cols - 1)
    if span <= 0 or step < config.node_width_px:
        raise LayoutOverflow(
            f"{n_cols} columns of width {config.node_width_px}px do not fit in {config.canvas_width_px}px"
        )
    totals = dataset.entity_totals()
    ky = vertical_scale(dataset.columns, [t.sum() for t in totals], config)
    pad = config.node_padding_px

    rects = []
    for c, order in enumerate(orderings):
        h = totals[c] * ky
        used = h.sum() + (len(h) - 1) * pad
        y = config.margin_px + (config.canvas_height_px - 2 * config.margin_px - used) / 2
        x = config.margin_px + c * step
        col = [None] * len(h)
        for slot in order:
            col[slot] = Rect(x, float(y), config.node_width_px, float(h[slot]))
            y += h[slot] + pad
        rects.append(tuple(col))

    incoming, outgoing = _neighbours(dataset)
    flows = dataset.flows
    src_y = [0.0] * len(flows)
    tgt_y = [0.0] * len(flows)
    for c, n in enumerate(dataset.columns):
        for k in range(n):
            rect = rects[c][k]
            out = sorted(outgoing[c][k], key=lambda i: positions[c + 1][flows[i].target.slot])
            y = rect.y
            for i in out:
                src_y[i] = y
                y += flows[i].value * ky
            inc = sorted(incoming[c][k], key=lambda i: positions[c - 1][flows[i].source.slot])
            y = rect.y
            for i in inc:
                tgt_y[i] = y
                y += flows[i].value * ky

    ribbons = []
    for i, fl in enumerate(flows):
        s = rects[fl.source.column][fl.source.slot]
        t = rects[fl.target.column][fl.target.slot]
        ribbons.append(Ribbon(s.x + s.width, src_y[i], t.x, tgt_y[i], fl.value * ky))

    return LayoutGeometry(
        float(config.canvas_width_px),
        float(config.canvas_height_px),
        tuple(rects),
        tuple(ribbons),
        tuple(tuple(int(s) for s in o) for o in orderings),
    )


def layout(dataset: AlluvialDataset, config: LayoutConfig = LayoutConfig()) -> LayoutGeometry:
    return assign_geometry(dataset, order_columns(dataset, config), config)
