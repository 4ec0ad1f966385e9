"""Study response ingestion and per-chart aggregation.

Study 1 rows are pre-graded task answers (``participant,chart,task,correct``);
Study 2 rows are pairwise judgements (``participant,chart_a,chart_b,verdict``).
"""
from __future__ import annotations

import csv
import enum
import io
import math
import os
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyInput, FormatError

TASKS = ("T1", "T2", "T3", "T4")
ACC3_TASKS = ("T2", "T3", "T4")

STUDY1_HEADER = ["participant", "chart", "task", "correct"]
STUDY2_HEADER = ["participant", "chart_a", "chart_b", "verdict"]

_TRUE = {"1", "true", "t", "yes", "y"}
_FALSE = {"0", "false", "f", "no", "n"}


class Verdict(enum.Enum):
    A_MORE_COMPLEX = "A_more_complex"
    B_MORE_COMPLEX = "B_more_complex"
    EQUAL = "equal"


_VERDICT_ALIASES = {
    "a_more_complex": Verdict.A_MORE_COMPLEX,
    "a": Verdict.A_MORE_COMPLEX,
    "b_more_complex": Verdict.B_MORE_COMPLEX,
    "b": Verdict.B_MORE_COMPLEX,
    "equal": Verdict.EQUAL,
    "=": Verdict.EQUAL,
}


@dataclass(frozen=True)
class TaskResponse:
    participant: str
    chart: str
    task: str
    correct: bool

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")


@dataclass(frozen=True)
class PairwiseResponse:
    participant: str
    chart_a: str
    chart_b: str
    verdict: Verdict

    def __post_init__(self):
        if self.chart_a == self.chart_b:
            raise ValueError(f"chart {self.chart_a!r} compared with itself")


@dataclass(frozen=True)
class TaskSummary:
    accuracy: float
    standard_error: float
    n_responses: int


@dataclass(frozen=True)
class AccuracyTable:
    """Per chart and task: (accuracy, response count), plus the summated means."""

    cells: dict[tuple[str, str], tuple[float, int]]
    acc3: dict[str, float]
    acc4: dict[str, float]
    overall: dict[str, TaskSummary]

    @property
    def charts(self) -> list[str]:
        return sorted({chart for chart, _ in self.cells})

    def accuracy(self, chart: str, task: str) -> float | None:
        cell = self.cells.get((chart, task))
        return None if cell is None else cell[0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["chart", *TASKS, "Acc3", "Acc4"])
        for chart in self.charts:
            row = [chart]
            for task in TASKS:
                a = self.accuracy(chart, task)
                row.append("" if a is None else f"{a:.10g}")
            for table in (self.acc3, self.acc4):
                row.append(f"{table[chart]:.10g}" if chart in table else "")
            w.writerow(row)
        return buf.getvalue()


def _open_rows(source) -> list[list[str]]:
    # a str with a newline (or an empty one) is CSV text; any other str or PathLike is a path
    if isinstance(source, os.PathLike) or (isinstance(source, str) and source and "\n" not in source):
        with open(source, newline="") as fh:
            return list(csv.reader(fh))
    text = source.read() if hasattr(source, "read") else source
    return list(csv.reader(io.StringIO(text)))


def _parse(source, header, parse_row, report):
    rows = _open_rows(source)
    if not rows or [h.strip() for h in rows[0]] != header:
        raise FormatError(f"missing header {','.join(header)}")
    records, errors = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            errors.append((lineno, f"expected {len(header)} fields, got {len(row)}"))
            continue
        try:
            records.append(parse_row([cell.strip() for cell in row]))
        except ValueError as exc:
            errors.append((lineno, str(exc)))
    if errors:
        if report is None:
            first_row, first_msg = errors[0]
            raise FormatError(
                f"row {first_row}: {first_msg} ({len(errors)} malformed row(s) in total)", errors
            )
        report.extend(errors)
    return records


def _parse_task_row(row) -> TaskResponse:
    participant, chart, task, correct = row
    if task not in TASKS:
        raise ValueError(f"unknown task label {task!r}")
    flag = correct.lower()
    if flag not in _TRUE | _FALSE:
        raise ValueError(f"correct must be 0/1 or true/false, got {correct!r}")
    return TaskResponse(participant, chart, task, flag in _TRUE)


def _parse_pair_row(row) -> PairwiseResponse:
    participant, a, b, verdict = row
    v = _VERDICT_ALIASES.get(verdict.lower())
    if v is None:
        raise ValueError(f"unknown verdict {verdict!r}")
    return PairwiseResponse(participant, a, b, v)


def ingest_study1(source, report: list | None = None) -> list[TaskResponse]:
    """Parse Study 1 CSV from a path, file object or CSV text.

    Malformed rows raise a FormatError listing every bad row, unless a
    ``report`` list is passed, which then receives ``(row_number, message)``
    pairs while the good rows are returned.
    """
    return _parse(source, STUDY1_HEADER, _parse_task_row, report)


def ingest_study2(source, report: list | None = None) -> list[PairwiseResponse]:
    return _parse(source, STUDY2_HEADER, _parse_pair_row, report)


def accuracy_table(responses: Iterable[TaskResponse], exclude: Iterable[str] = ()) -> AccuracyTable:
    """Fraction correct per chart-task cell; charts in ``exclude`` are dropped."""
    excluded = set(exclude)
    hits: dict[tuple[str, str], list[int]] = defaultdict(lambda: [0, 0])
    for r in responses:
        if r.chart in excluded:
            continue
        cell = hits[(r.chart, r.task)]
        cell[0] += bool(r.correct)
        cell[1] += 1
    if not hits:
        raise EmptyInput("no study 1 responses to aggregate")
    cells = {key: (c / n, n) for key, (c, n) in hits.items()}

    charts = sorted({chart for chart, _ in cells})
    acc3, acc4 = {}, {}
    for chart in charts:
        per_task = {t: cells[(chart, t)][0] for t in TASKS if (chart, t) in cells}
        if all(t in per_task for t in ACC3_TASKS):
            acc3[chart] = sum(per_task[t] for t in ACC3_TASKS) / len(ACC3_TASKS)
        if all(t in per_task for t in TASKS):
            acc4[chart] = sum(per_task.values()) / len(TASKS)

    overall = {}
    for task in TASKS:
        chart_acc = [cells[(c, task)][0] for c in charts if (c, task) in cells]
        if not chart_acc:
            continue
        correct = sum(hits[(c, task)][0] for c in charts if (c, task) in cells)
        total = sum(hits[(c, task)][1] for c in charts if (c, task) in cells)
        se = float(np.std(chart_acc, ddof=1) / math.sqrt(len(chart_acc))) if len(chart_acc) > 1 else 0.0
        overall[task] = TaskSummary(correct / total, se, total)
    return AccuracyTable(cells, acc3, acc4, overall)


def perceived_complexity(
    responses: Iterable[PairwiseResponse], charts: Iterable[str] = ()
) -> dict[str, int]:
    """+10 for each trial a chart is judged more complex, -10 for less, 0 for equal.

    Charts listed in ``charts`` but never compared keep their initial 0.
    """
    scores = {c: 0 for c in charts}
    for r in responses:
        scores.setdefault(r.chart_a, 0)
        scores.setdefault(r.chart_b, 0)
        if r.verdict is Verdict.A_MORE_COMPLEX:
            scores[r.chart_a] += 10
            scores[r.chart_b] -= 10
        elif r.verdict is Verdict.B_MORE_COMPLEX:
            scores[r.chart_a] -= 10
            scores[r.chart_b] += 10
    return scores


def perceived_csv(scores: dict[str, int]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["chart", "perceived"])
    for chart in sorted(scores):
        w.writerow([chart, scores[chart]])
    return buf.getvalue()


def study1_csv(responses: Sequence[TaskResponse]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(STUDY1_HEADER)
    for r in responses:
        w.writerow([r.participant, r.chart, r.task, int(r.correct)])
    return buf.getvalue()


def study2_csv(responses: Sequence[PairwiseResponse]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(STUDY2_HEADER)
    for r in responses:
        w.writerow([r.participant, r.chart_a, r.chart_b, r.verdict.value])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# synthetic responses from a planted model


def simulate_study1(
    chart_ids: Sequence[str],
    difficulty: Sequence[float],
    rng: np.random.Generator,
    participants: int = 91,
    trials: int = 19,
    base_rates: dict[str, float] | None = None,
) -> list[TaskResponse]:
    """Bernoulli answers whose success rate falls linearly with ``difficulty`` in [0, 1].

    Each participant sees ``trials`` distinct charts with a random task each.
    """
    base_rates = base_rates or {"T1": 0.95, "T2": 0.75, "T3": 0.9, "T4": 0.85}
    diff = np.clip(np.asarray(difficulty, dtype=float), 0.0, 1.0)
    n = len(chart_ids)
    out = []
    for p in range(participants):
        picks = rng.choice(n, size=min(trials, n), replace=False)
        tasks = rng.integers(0, len(TASKS), size=len(picks))
        u = rng.random(len(picks))
        for idx, t, ui in zip(picks, tasks, u):
            task = TASKS[t]
            rate = base_rates[task] * (1.0 - 0.6 * diff[idx])
            out.append(TaskResponse(f"p{p:03d}", chart_ids[idx], task, bool(ui < rate)))
    return out


def simulate_study2(
    chart_ids: Sequence[str],
    complexity: Sequence[float],
    rng: np.random.Generator,
    participants: int = 150,
    trials: int = 31,
    noise: float = 0.0,
    tie_margin: float = 0.0,
) -> list[PairwiseResponse]:
    """Pairwise verdicts comparing a planted complexity plus optional Gaussian noise.

    Pairs whose perceived difference is within ``tie_margin`` are rated equal.
    """
    comp = np.asarray(complexity, dtype=float)
    n = len(chart_ids)
    out = []
    for p in range(participants):
        for _ in range(trials):
            a, b = rng.choice(n, size=2, replace=False)
            d = comp[a] - comp[b] + (noise * rng.standard_normal() if noise else 0.0)
            if abs(d) <= tie_margin:
                v = Verdict.EQUAL
            else:
                v = Verdict.A_MORE_COMPLEX if d > 0 else Verdict.B_MORE_COMPLEX
            out.append(PairwiseResponse(f"p{p:03d}", chart_ids[a], chart_ids[b], v))
    return out
