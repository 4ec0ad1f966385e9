"""Seeded synthesis of alluvial datasets by rejection sampling.

Randomness comes from PCG64 streams derived with ``numpy.random.SeedSequence``.
Every stream is keyed by ``(attempt, stage, index)`` under the user seed:

* stage 0, index 0: chart shape (timestep count, column sizes), drawn at
  attempt 0 and again whenever the shape is abandoned
* stage 1, index 0: partition of the total flow over the first column
* stage 2, index c: wiring of the gap between column c and c + 1

so any reimplementation using PCG64 + SeedSequence reproduces the output.
"""
from __future__ import annotations

import math
import os
from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np

from .core import AlluvialDataset, EntityRef, Flow
from .errors import GenerationExhausted
from .layout import LayoutConfig, vertical_scale

ENV_MAX_ATTEMPTS = "ALLUVIAL_MAX_ATTEMPTS"

# flow units per entity used to size the total flow
UNITS_PER_ENTITY = 2.5
MIN_ENTITY_UNITS = 2
GAP_RETRIES = 50
RESHAPE_AFTER = 40
_EPS = 1e-9


def _default_max_attempts() -> int:
    raw = os.environ.get(ENV_MAX_ATTEMPTS)
    if raw is None or not raw.strip():
        return 10000
    return int(raw)


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 0
    timestep_range: tuple[int, int] = (3, 6)
    entities_per_column_range: tuple[int, int] = (2, 5)
    total_flow_choices: tuple[int, ...] = (30, 50, 80)
    flow_fraction_range: tuple[float, float] = (0.25, 0.50)
    inflow_margin: float = 0.05
    min_thickness_px: float = 10
    canvas_height_px: float = 1080
    max_attempts: int = field(default_factory=_default_max_attempts)

    def __post_init__(self):
        lo, hi = self.timestep_range
        if not 2 <= lo <= hi:
            raise ValueError(f"timestep_range {self.timestep_range} must satisfy 2 <= lo <= hi")
        lo, hi = self.entities_per_column_range
        if not 1 <= lo <= hi:
            raise ValueError(f"entities_per_column_range {self.entities_per_column_range} is empty")
        fmin, fmax = self.flow_fraction_range
        if not 0 < fmin <= fmax <= 1:
            raise ValueError(f"flow_fraction_range {self.flow_fraction_range} is invalid")
        if not self.total_flow_choices:
            raise ValueError("total_flow_choices is empty")
        if not self.inflow_margin > 0:
            raise ValueError("inflow_margin must be positive")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def layout_config(self) -> LayoutConfig:
        return LayoutConfig(canvas_height_px=self.canvas_height_px)

    @property
    def split_range(self) -> tuple[int, int]:
        """How many outgoing flows an entity may have under the fraction rule."""
        fmin, fmax = self.flow_fraction_range
        return math.ceil(1 / fmax - _EPS), math.floor(1 / fmin + _EPS)


def _stream(seed: int, attempt: int, stage: int, index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(attempt, stage, index))
    return np.random.Generator(np.random.PCG64(ss))


def choose_total(sizes, config: GeneratorConfig) -> int:
    """Smallest total flow with UNITS_PER_ENTITY units for every entity of the chart."""
    choices = sorted(config.total_flow_choices)
    for total in choices:
        if total >= UNITS_PER_ENTITY * sum(sizes):
            return total
    return choices[-1]


def largest_remainder(parts, total: int) -> list[int]:
    """Round non-negative reals summing to ``total`` to integers with that sum.

    Leftover units go to the largest fractional remainders, ties to the lower index.
    """
    floors = [math.floor(x + _EPS) for x in parts]
    short = int(round(total - sum(floors)))
    if short > 0:
        order = sorted(range(len(parts)), key=lambda i: (-(parts[i] - floors[i]), i))
        for i in order[:short]:
            floors[i] += 1
    return floors


def partition_total(total: int, n: int, min_units: int, rng: np.random.Generator):
    """Stick-breaking split of ``total`` into ``n`` integer parts of at least ``min_units``."""
    spare = total - n * min_units
    if spare < 0:
        return None
    sticks = rng.beta(2.0, 2.0 * np.arange(n - 1, 0, -1)).tolist() if n > 1 else []
    shares = []
    left = 1.0
    for b in sticks:
        shares.append(left * b)
        left -= shares[-1]
    shares.append(left)
    return [min_units + p for p in largest_remainder([x * spare for x in shares], spare)]


def capped_shares(spare: float, caps, uniforms) -> list[float]:
    """Dirichlet(1, ..., 1) split of ``spare`` with each share capped.

    Excess above a cap is refilled proportionally into the parts still below
    their cap. ``uniforms`` supplies one U(0, 1) draw per part.
    """
    k = len(caps)
    w = [-math.log(1.0 - next(uniforms)) for _ in range(k)]
    out = [0.0] * k
    free = [True] * k
    left = spare
    while left > _EPS and any(free):
        wsum = sum(wi for wi, f in zip(w, free) if f)
        for i in range(k):
            if free[i]:
                take = min(left * w[i] / wsum, caps[i] - out[i])
                out[i] += take
        left = spare - sum(out)
        free = [o < c - _EPS for o, c in zip(out, caps)]
    return out


def split_entity(amount: int, k: int, config: GeneratorConfig, uniforms):
    """Integer split of ``amount`` into ``k`` flows inside the fraction range, or None."""
    fmin, fmax = config.flow_fraction_range
    lo = max(math.ceil(fmin * amount - _EPS), 1)
    hi = math.floor(fmax * amount + _EPS)
    if not lo * k <= amount <= hi * k:
        return None
    shares = capped_shares(amount - k * lo, [float(hi - lo)] * k, uniforms)
    parts = largest_remainder([lo + x for x in shares], amount)
    if min(parts) < lo or max(parts) > hi:  # pragma: no cover - integer bounds keep rounding inside
        return None
    return parts


def _pick(n: int, k: int, uniforms) -> list[int]:
    """k distinct indices out of range(n) by partial Fisher-Yates, sorted."""
    pool = list(range(n))
    for i in range(k):
        j = i + int(next(uniforms) * (n - i))
        pool[i], pool[j] = pool[j], pool[i]
    return sorted(pool[:k])


def _margin_ok(values, margin: float) -> bool:
    if len(values) < 2:
        return True
    v = sorted(values, reverse=True)
    return v[0] - v[1] >= margin * sum(v) - _EPS


def feasible_splits(amount: int, n_next: int, config: GeneratorConfig) -> list[int]:
    """Outgoing flow counts for which ``amount`` splits into in-range integers."""
    kmin, kmax = config.split_range
    fmin, fmax = config.flow_fraction_range
    lo = max(math.ceil(fmin * amount - _EPS), 1)
    hi = math.floor(fmax * amount + _EPS)
    return [k for k in range(max(kmin, 1), min(kmax, n_next) + 1) if lo * k <= amount <= hi * k]


def _splittable(totals, n_next: int, config: GeneratorConfig, failures) -> bool:
    """Whether a column with these entity totals can feed a column of ``n_next``."""
    if not all(feasible_splits(int(a), n_next, config) for a in totals):
        failures["flow_fraction"] += 1
        return False
    kmin = config.split_range[0]
    if n_next == kmin and config.flow_fraction_range[1] * kmin <= 1 + _EPS:
        # every entity must send equal parts to all next entities, which then
        # see identical inflows; only the margin rule can still fail
        if not _margin_ok([a / kmin for a in totals], config.inflow_margin):
            failures["inflow_margin"] += 1
            return False
    return True


def _wire_gap(totals, n_next, n_after, config, rng, failures):
    """Flows from one column to the next: (list of (src, tgt, value), next totals) or None.

    ``n_after`` is the size of the column after the next one (0 if none); the
    next column's totals are rejected early when they could not be split.
    """
    # 1 draw for the flow count, up to kmax for targets and kmax for the split
    kmax = config.split_range[1]
    uniforms = iter(rng.random(len(totals) * (1 + 2 * kmax)).tolist())
    edges = []
    for i, amount in enumerate(totals):
        amount = int(amount)
        ks = feasible_splits(amount, n_next, config)
        if not ks:
            failures["flow_fraction"] += 1
            return None
        k = ks[int(next(uniforms) * len(ks))]
        targets = _pick(n_next, k, uniforms)
        parts = split_entity(amount, k, config, uniforms)
        if parts is None:  # pragma: no cover - ks only holds feasible counts
            failures["flow_fraction"] += 1
            return None
        edges.extend((i, j, int(v)) for j, v in zip(targets, parts))
    inflows = [[] for _ in range(n_next)]
    for _, j, v in edges:
        inflows[j].append(v)
    if any(not vals for vals in inflows):
        failures["target_coverage"] += 1
        return None
    if not all(_margin_ok(vals, config.inflow_margin) for vals in inflows):
        failures["inflow_margin"] += 1
        return None
    nxt = [sum(vals) for vals in inflows]
    if n_after and not _splittable(nxt, n_after, config, failures):
        return None
    return edges, nxt


def _draw_shape(config: GeneratorConfig, draw: int) -> list[int]:
    rng = _stream(config.seed, draw, 0, 0)
    t = int(rng.integers(config.timestep_range[0], config.timestep_range[1] + 1))
    lo, hi = config.entities_per_column_range
    return [int(n) for n in rng.integers(lo, hi + 1, size=t)]


def shape_feasible(sizes, config: GeneratorConfig) -> bool:
    """False for shapes the controls can never satisfy.

    When the fraction rule forces an even two-way split, an interior
    two-entity column receives half of every upstream entity on each side,
    so both of its entities carry exactly half the total. If the next column
    also has two entities, each of those gets two equal inflows and the
    margin rule fails.
    """
    kmin = config.split_range[0]
    if kmin != 2 or config.flow_fraction_range[1] * kmin > 1 + _EPS:
        return True
    return not any(sizes[c] == 2 and sizes[c + 1] == 2 for c in range(1, len(sizes) - 1))


def generate(config: GeneratorConfig, chart_id: str | None = None) -> AlluvialDataset:
    """One dataset satisfying every generation control, or GenerationExhausted.

    The chart shape is kept across attempts and only redrawn when it is
    structurally infeasible or RESHAPE_AFTER wiring attempts in a row failed,
    so rejection barely biases the distribution of shapes.
    """
    failures: Counter = Counter()
    lay = config.layout_config()
    chart_id = chart_id if chart_id is not None else f"seed_{config.seed}"
    sizes = None
    since_shape = 0
    for attempt in range(config.max_attempts):
        if sizes is None or since_shape >= RESHAPE_AFTER:
            sizes = _draw_shape(config, attempt)
            since_shape = 0
            total = choose_total(sizes, config)
            ky = vertical_scale(sizes, [total] * len(sizes), lay)
            if not shape_feasible(sizes, config):
                failures["shape"] += 1
                sizes = None
                continue
        since_shape += 1
        t = len(sizes)
        first = partition_total(total, sizes[0], MIN_ENTITY_UNITS, _stream(config.seed, attempt, 1, 0))
        if first is None:
            failures["entity_minimum"] += 1
            continue
        if not _splittable(first, sizes[1], config, failures):
            continue
        flows = []
        current = first
        for c in range(t - 1):
            gap_rng = _stream(config.seed, attempt, 2, c)
            n_after = sizes[c + 2] if c + 2 < t else 0
            wired = None
            for _ in range(GAP_RETRIES):
                wired = _wire_gap(current, sizes[c + 1], n_after, config, gap_rng, failures)
                if wired is not None:
                    break
            if wired is None:
                break
            edges, current = wired
            flows.extend(Flow(EntityRef(c, i), EntityRef(c + 1, j), v) for i, j, v in edges)
        else:
            if min(fl.value for fl in flows) * ky < config.min_thickness_px - _EPS:
                failures["min_thickness"] += 1
                continue
            dataset = AlluvialDataset(chart_id, tuple(sizes), tuple(flows))
            if check_dataset(dataset, config):  # pragma: no cover - construction guarantees validity
                failures["post_check"] += 1
                continue
            return dataset
    worst = failures.most_common(1)[0][0] if failures else "none"
    raise GenerationExhausted(
        f"seed {config.seed}: no valid chart in {config.max_attempts} attempts "
        f"(most frequent failure: {worst}; counts: {dict(failures)})",
        failures,
        config.seed,
    )


def generate_corpus(config: GeneratorConfig, count: int) -> list[AlluvialDataset]:
    """``count`` charts from seeds seed, seed+1, ... named chart_000, chart_001, ..."""
    if count < 1:
        raise ValueError("count must be at least 1")
    return [
        generate(replace(config, seed=config.seed + i), chart_id=f"chart_{i:03d}")
        for i in range(count)
    ]


def check_dataset(dataset: AlluvialDataset, config: GeneratorConfig = None) -> list[str]:
    """Every violated generation control, as human readable strings."""
    config = config or GeneratorConfig(max_attempts=1)
    problems = []
    t = len(dataset.columns)
    lo, hi = config.timestep_range
    if not lo <= t <= hi:
        problems.append(f"timesteps {t} outside {lo}-{hi}")
    lo, hi = config.entities_per_column_range
    for c, n in enumerate(dataset.columns):
        if not lo <= n <= hi:
            problems.append(f"column {c} has {n} entities, outside {lo}-{hi}")

    inflow = [[[] for _ in range(n)] for n in dataset.columns]
    outflow = [[[] for _ in range(n)] for n in dataset.columns]
    for fl in dataset.flows:
        outflow[fl.source.column][fl.source.slot].append(fl.value)
        inflow[fl.target.column][fl.target.slot].append(fl.value)

    col_totals = []
    for c, n in enumerate(dataset.columns):
        ins = [sum(v) for v in inflow[c]]
        outs = [sum(v) for v in outflow[c]]
        if 0 < c < t - 1:
            for k in range(n):
                if abs(ins[k] - outs[k]) > _EPS:
                    problems.append(f"entity ({c},{k}) inflow {ins[k]} != outflow {outs[k]}")
        col_totals.append(sum(outs) if c < t - 1 else sum(ins))
    if len(set(col_totals)) != 1:
        problems.append(f"column totals differ: {col_totals}")
    elif col_totals[0] not in config.total_flow_choices:
        problems.append(f"total flow {col_totals[0]} not in {config.total_flow_choices}")

    fmin, fmax = config.flow_fraction_range
    for c in range(t - 1):
        for k in range(dataset.columns[c]):
            vals = outflow[c][k]
            whole = sum(vals)
            for v in vals:
                if not fmin * whole - _EPS <= v <= fmax * whole + _EPS:
                    problems.append(f"flow of {v} from ({c},{k}) is not {fmin:.0%}-{fmax:.0%} of {whole}")
    for c in range(1, t):
        for k in range(dataset.columns[c]):
            if not _margin_ok(inflow[c][k], config.inflow_margin):
                problems.append(f"entity ({c},{k}) inflows {sorted(inflow[c][k])} violate the margin rule")

    if dataset.flows and len(set(col_totals)) == 1:
        ky = vertical_scale(dataset.columns, col_totals, config.layout_config())
        thinnest = min(fl.value for fl in dataset.flows) * ky
        if thinnest < config.min_thickness_px - _EPS:
            problems.append(f"thinnest flow is {thinnest:.2f}px < {config.min_thickness_px}px")
    return problems
