"""JSON schemas for every file the toolkit writes, plus a validator.

``check`` sniffs a file's kind from its name and content and validates it
against the matching schema; CSV outputs are checked by header and cell
types.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import jsonschema

from .core import FEATURE_CSV_HEADER
from .study import STUDY1_HEADER, STUDY2_HEADER, TASKS

_NUM = {"type": "number"}
_NONNEG = {"type": "number", "minimum": 0}
_POS = {"type": "number", "exclusiveMinimum": 0}
_REF = {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 2, "maxItems": 2}
_W4 = {
    "type": "object",
    "properties": {k: _NUM for k in ("w_t", "w_e", "w_f", "w_c")},
    "required": ["w_t", "w_e", "w_f", "w_c"],
}
_CLASS_FREQ = {
    "type": "object",
    "properties": {k: {"type": "number", "minimum": 0, "maximum": 1} for k in ("easy", "medium", "hard")},
    "required": ["easy", "medium", "hard"],
    "additionalProperties": False,
}

DATASET = {
    "type": "object",
    "properties": {
        "id": {"type": "string"},
        "columns": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 2},
        "flows": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {"source": _REF, "target": _REF, "value": _POS},
                "required": ["source", "target", "value"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["id", "columns", "flows"],
    "additionalProperties": False,
}

_RECT = {
    "type": "object",
    "properties": {"x": _NUM, "y": _NUM, "width": _POS, "height": _NONNEG},
    "required": ["x", "y", "width", "height"],
    "additionalProperties": False,
}
_RIBBON = {
    "type": "object",
    "properties": {k: _NUM for k in ("source_x", "source_y", "target_x", "target_y")} | {"thickness": _NONNEG},
    "required": ["source_x", "source_y", "target_x", "target_y", "thickness"],
    "additionalProperties": False,
}
LAYOUT = {
    "type": "object",
    "properties": {
        "width": _POS,
        "height": _POS,
        "entity_rects": {"type": "array", "items": {"type": "array", "items": _RECT}},
        "flow_ribbons": {"type": "array", "items": _RIBBON},
        "orderings": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        },
    },
    "required": ["width", "height", "entity_rects", "flow_ribbons", "orderings"],
    "additionalProperties": False,
}

WEIGHTS = {
    "type": "object",
    "properties": {
        "label": {"type": "string"},
        "weights": _W4,
        "weights_sd": _W4,
        "r_squared": {"type": "number", "minimum": 0, "maximum": 1},
        "k": {"type": "integer", "minimum": 2},
        "repeats": {"type": "integer", "minimum": 1},
    },
    "required": ["label", "weights", "weights_sd", "r_squared", "k", "repeats"],
}

REPORT = {
    "type": "object",
    "properties": {
        "weights": {"type": "object", "properties": {"label": {"type": "string"}} | _W4["properties"]},
        "accuracy": {"type": "object", "properties": {"mean": _NUM, "sd": _NUM}, "required": ["mean", "sd"]},
        "rmse": {"type": "object", "properties": {"mean": _NUM, "sd": _NUM}, "required": ["mean", "sd"]},
        "stratified": {"type": "boolean"},
        "classification_counts": {"type": "object", "additionalProperties": {"type": "integer", "minimum": 0}},
        "mosaic": {"type": "object", "additionalProperties": _CLASS_FREQ},
    },
    "required": ["weights", "accuracy", "rmse", "classification_counts", "mosaic"],
}

SUMMARY = {
    "type": "object",
    "properties": {
        "seed": {"type": "integer"},
        "charts": {"type": "integer", "minimum": 1},
        "stages": {"type": "object"},
        "artifacts": {"type": "array", "items": {"type": "string"}},
    },
    "required": ["seed", "charts", "stages", "artifacts"],
}

SCHEMAS = {"dataset": DATASET, "layout": LAYOUT, "weights": WEIGHTS, "report": REPORT, "summary": SUMMARY}

CSV_HEADERS = {
    "features": FEATURE_CSV_HEADER,
    "study1": STUDY1_HEADER,
    "study2": STUDY2_HEADER,
    "accuracy": ["chart", *TASKS, "Acc3", "Acc4"],
    "perceived": ["chart", "perceived"],
    "histogram": ["bin_low", "bin_high", "count"],
}


def sniff_json(path: Path, data) -> str:
    name = path.name
    if name.endswith(".layout.json"):
        return "layout"
    if isinstance(data, dict):
        if "columns" in data and "flows" in data:
            return "dataset"
        if "mosaic" in data:
            return "report"
        if "weights_sd" in data:
            return "weights"
        if "stages" in data:
            return "summary"
    raise ValueError(f"{name}: unrecognised JSON document")


def validate_json(kind: str, data) -> list[str]:
    validator = jsonschema.Draft202012Validator(SCHEMAS[kind])
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.path))
    out = [f"{'/'.join(map(str, e.path)) or '<root>'}: {e.message}" for e in errors]
    if kind == "dataset" and not out:
        from .core import AlluvialDataset
        from .errors import InvalidDataset

        try:
            AlluvialDataset.from_dict(data)
        except InvalidDataset as exc:
            out.append(str(exc))
    if kind == "report" and not out:
        for chart, freq in data["mosaic"].items():
            if abs(sum(freq.values()) - 1.0) > 1e-9 and data["classification_counts"].get(chart, 0):
                out.append(f"mosaic/{chart}: frequencies sum to {sum(freq.values())}")
    return out


def validate_csv(text: str) -> tuple[str, list[str]]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        return "csv", ["empty file"]
    header = rows[0]
    kind = next((k for k, h in CSV_HEADERS.items() if h == header), None)
    if kind is None:
        return "csv", [f"unrecognised header {','.join(header)}"]
    problems = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            problems.append(f"row {lineno}: expected {len(header)} fields, got {len(row)}")
            continue
        numeric = {
            "features": row[1:7],
            "accuracy": [c for c in row[1:] if c != ""],
            "perceived": row[1:],
            "histogram": row,
        }.get(kind, [])
        for cell in numeric:
            try:
                float(cell)
            except ValueError:
                problems.append(f"row {lineno}: {cell!r} is not a number")
        if kind == "features" and row[7] not in ("easy", "medium", "hard"):
            problems.append(f"row {lineno}: unknown class {row[7]!r}")
    return kind, problems


def check_file(path) -> tuple[str, list[str]]:
    """(kind, problems) for one output file; an empty list means valid."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".csv":
        return validate_csv(text)
    if path.suffix == ".svg":
        ok = text.startswith("<?xml") and "<svg" in text and text.rstrip().endswith("</svg>")
        return "svg", [] if ok else ["not a complete SVG document"]
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        return "json", [f"invalid JSON: {exc}"]
    try:
        kind = sniff_json(path, data)
    except ValueError as exc:
        return "json", [str(exc)]
    return kind, validate_json(kind, data)
