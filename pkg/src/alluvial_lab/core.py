"""Domain types, feature extraction and the complexity scoring models."""
from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import _kernels
from .errors import EmptyInput, InvalidDataset, InvalidOrdering, OutOfRange


class EntityRef(NamedTuple):
    column: int
    slot: int


@dataclass(frozen=True)
class Flow:
    source: EntityRef
    target: EntityRef
    value: float

    def __post_init__(self):
        object.__setattr__(self, "source", EntityRef(*self.source))
        object.__setattr__(self, "target", EntityRef(*self.target))


@dataclass(frozen=True)
class AlluvialDataset:
    """Columns of entities joined by left-to-right flows between neighbours.

    ``columns[c]`` is the entity count of timestep ``c``. Parallel flows with
    the same endpoints are merged by summing their values, keeping the
    position of the first occurrence.
    """

    id: str
    columns: tuple[int, ...]
    flows: tuple[Flow, ...]

    def __post_init__(self):
        columns = tuple(int(n) for n in self.columns)
        merged: dict[tuple[EntityRef, EntityRef], float] = {}
        for fl in self.flows:
            fl = fl if isinstance(fl, Flow) else Flow(*fl)
            key = (fl.source, fl.target)
            merged[key] = merged.get(key, 0) + fl.value
        flows = tuple(Flow(s, t, v) for (s, t), v in merged.items())
        object.__setattr__(self, "columns", columns)
        object.__setattr__(self, "flows", flows)
        self._validate()

    def _validate(self):
        cols = self.columns
        if len(cols) < 2:
            raise InvalidDataset(f"{self.id}: need at least 2 columns, got {len(cols)}")
        if any(n < 1 for n in cols):
            raise InvalidDataset(f"{self.id}: every column needs at least one entity")
        has_in = [[False] * n for n in cols]
        has_out = [[False] * n for n in cols]
        for fl in self.flows:
            s, t = fl.source, fl.target
            for ref in (s, t):
                if not (0 <= ref.column < len(cols) and 0 <= ref.slot < cols[ref.column]):
                    raise InvalidDataset(f"{self.id}: entity {tuple(ref)} does not exist")
            if t.column != s.column + 1:
                raise InvalidDataset(
                    f"{self.id}: flow {tuple(s)}->{tuple(t)} must join adjacent columns left to right"
                )
            if not fl.value > 0:
                raise InvalidDataset(f"{self.id}: flow {tuple(s)}->{tuple(t)} has non-positive value")
            has_out[s.column][s.slot] = True
            has_in[t.column][t.slot] = True
        last = len(cols) - 1
        for c, n in enumerate(cols):
            for k in range(n):
                if c > 0 and not has_in[c][k]:
                    raise InvalidDataset(f"{self.id}: entity ({c}, {k}) has no incoming flow")
                if c < last and not has_out[c][k]:
                    raise InvalidDataset(f"{self.id}: entity ({c}, {k}) has no outgoing flow")

    @property
    def n_entities(self) -> int:
        return sum(self.columns)

    def entity_totals(self) -> list[np.ndarray]:
        """Throughput per entity: max(inflow, outflow) for every column."""
        inflow = [np.zeros(n) for n in self.columns]
        outflow = [np.zeros(n) for n in self.columns]
        for fl in self.flows:
            outflow[fl.source.column][fl.source.slot] += fl.value
            inflow[fl.target.column][fl.target.slot] += fl.value
        return [np.maximum(i, o) for i, o in zip(inflow, outflow)]

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "columns": list(self.columns),
            "flows": [
                {"source": list(fl.source), "target": list(fl.target), "value": fl.value}
                for fl in self.flows
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "AlluvialDataset":
        try:
            flows = [
                Flow(EntityRef(*f["source"]), EntityRef(*f["target"]), f["value"])
                for f in data["flows"]
            ]
            return cls(str(data["id"]), tuple(data["columns"]), tuple(flows))
        except (KeyError, TypeError) as exc:
            raise InvalidDataset(f"malformed dataset document: {exc!r}") from exc

    @classmethod
    def from_json(cls, text: str) -> "AlluvialDataset":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidDataset(f"not valid JSON: {exc}") from exc
        return cls.from_dict(data)


class ComplexityClass(enum.Enum):
    EASY = "easy"
    MEDIUM = "medium"
    HARD = "hard"

    @property
    def index(self) -> int:
        return _CLASS_ORDER.index(self)

    @classmethod
    def from_index(cls, i: int) -> "ComplexityClass":
        return _CLASS_ORDER[i]


_CLASS_ORDER = (ComplexityClass.EASY, ComplexityClass.MEDIUM, ComplexityClass.HARD)

EASY_BELOW = 0.33
HARD_FROM = 0.67


class FeatureVector(NamedTuple):
    t: int
    e: int
    f: int
    c: int

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


@dataclass(frozen=True)
class ModelWeights:
    w_t: float
    w_e: float
    w_f: float
    w_c: float
    label: str = "custom"

    LABELS = ("S_a", "Acc3", "Acc4", "Svc", "custom")

    def __post_init__(self):
        if self.label not in self.LABELS:
            raise ValueError(f"unknown weight label {self.label!r}")
        if self.label == "S_a" and self.as_tuple() != (1, 1, 1, 1):
            raise ValueError("S_a weights must all be exactly 1")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.w_t, self.w_e, self.w_f, self.w_c)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple(), dtype=float)


S_A = ModelWeights(1, 1, 1, 1, "S_a")
ACC3 = ModelWeights(0.222, 0.282, 0.267, 0.228, "Acc3")
ACC4 = ModelWeights(0.2566, 0.234, 0.206, 0.302, "Acc4")
SVC = ModelWeights(0.240, 0.247, 0.314, 0.197, "Svc")
WEIGHT_SETS = {w.label: w for w in (S_A, ACC3, ACC4, SVC)}


@dataclass(frozen=True)
class ComplexityReport:
    features: FeatureVector
    raw_score: float
    normalized_score: float
    complexity_class: ComplexityClass
    chart_id: str = field(default="")


def validate_orderings(dataset: AlluvialDataset, orderings) -> list[np.ndarray]:
    """Check orderings and return, per column, the position of every slot."""
    if len(orderings) != len(dataset.columns):
        raise InvalidOrdering(
            f"expected {len(dataset.columns)} column orderings, got {len(orderings)}"
        )
    positions = []
    for c, (n, order) in enumerate(zip(dataset.columns, orderings)):
        order = np.asarray(order, dtype=np.int64)
        if order.shape != (n,) or not np.array_equal(np.sort(order), np.arange(n)):
            raise InvalidOrdering(f"column {c}: {order.tolist()} is not a permutation of 0..{n - 1}")
        pos = np.empty(n, dtype=np.int64)
        pos[order] = np.arange(n)
        positions.append(pos)
    return positions


def identity_orderings(dataset: AlluvialDataset) -> list[list[int]]:
    return [list(range(n)) for n in dataset.columns]


def flow_position_arrays(dataset: AlluvialDataset, positions) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    m = len(dataset.flows)
    gap = np.empty(m, dtype=np.int64)
    src = np.empty(m, dtype=np.int64)
    tgt = np.empty(m, dtype=np.int64)
    for i, fl in enumerate(dataset.flows):
        gap[i] = fl.source.column
        src[i] = positions[fl.source.column][fl.source.slot]
        tgt[i] = positions[fl.target.column][fl.target.slot]
    return gap, src, tgt


def count_crossings(dataset: AlluvialDataset, orderings) -> int:
    """Ordinal crossings: flow pairs in one gap whose endpoint orders invert.

    Pairs sharing a source or target entity never count, since ribbons are
    stacked at each entity in the order of their opposite endpoints.
    """
    positions = validate_orderings(dataset, orderings)
    return _kernels.count_gap_crossings(*flow_position_arrays(dataset, positions))


def extract_features(dataset: AlluvialDataset, ordering) -> FeatureVector:
    c = count_crossings(dataset, ordering)
    return FeatureVector(len(dataset.columns), dataset.n_entities, len(dataset.flows), c)


def score(features: FeatureVector, weights: ModelWeights) -> float:
    t, e, f, c = features
    return weights.w_t * t + weights.w_e * e + weights.w_f * f + weights.w_c * c


def normalize_scores(scores: Sequence[float]) -> list[float]:
    """Min-max scale to [0, 1]; a constant list maps to all zeros."""
    arr = np.asarray(list(scores), dtype=float)
    if arr.size == 0:
        raise EmptyInput("cannot normalize an empty score list")
    lo, hi = arr.min(), arr.max()
    if hi == lo:
        return [0.0] * arr.size
    return ((arr - lo) / (hi - lo)).tolist()


def classify(normalized_score: float) -> ComplexityClass:
    if not 0.0 <= normalized_score <= 1.0:
        raise OutOfRange(f"normalized score {normalized_score} outside [0, 1]")
    if normalized_score < EASY_BELOW:
        return ComplexityClass.EASY
    if normalized_score < HARD_FROM:
        return ComplexityClass.MEDIUM
    return ComplexityClass.HARD


def classify_scores(scores: Sequence[float]) -> list[ComplexityClass]:
    return [classify(s) for s in normalize_scores(scores)]


def build_reports(
    features: Sequence[FeatureVector],
    weights: ModelWeights,
    chart_ids: Iterable[str] | None = None,
) -> list[ComplexityReport]:
    """Score, normalize over the whole list and bin every chart."""
    features = [FeatureVector(*fv) for fv in features]
    ids = list(chart_ids) if chart_ids is not None else [""] * len(features)
    raw = [score(fv, weights) for fv in features]
    norm = normalize_scores(raw)
    return [
        ComplexityReport(fv, r, n, classify(n), cid)
        for fv, r, n, cid in zip(features, raw, norm, ids)
    ]


FEATURE_CSV_HEADER = ["id", "t", "e", "f", "c", "raw_score", "normalized_score", "class"]


def features_csv(reports: Sequence[ComplexityReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FEATURE_CSV_HEADER)
    for r in reports:
        writer.writerow(
            [r.chart_id, *r.features, _fmt(r.raw_score), _fmt(r.normalized_score), r.complexity_class.value]
        )
    return buf.getvalue()


def read_features_csv(text: str) -> tuple[list[str], list[FeatureVector]]:
    from .errors import FormatError

    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][:5] != FEATURE_CSV_HEADER[:5]:
        raise FormatError("feature CSV must start with header " + ",".join(FEATURE_CSV_HEADER))
    ids, feats = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            ids.append(row[0])
            feats.append(FeatureVector(*(int(v) for v in row[1:5])))
        except (ValueError, TypeError) as exc:
            raise FormatError(f"row {lineno}: {exc}", [(lineno, str(exc))]) from exc
    return ids, feats


def _fmt(x: float) -> str:
    return f"{x:.10g}"
