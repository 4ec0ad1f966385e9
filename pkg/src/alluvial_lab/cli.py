"""``alluvial-lab`` command line.

Settings resolve as: command line flags > environment variables > the JSON
file given by --config > built-in defaults. Environment variables:

  ALLUVIAL_SEED          default --seed
  ALLUVIAL_OUT           default --out
  ALLUVIAL_CONFIG        default --config
  ALLUVIAL_MAX_ATTEMPTS  generator retry budget
  ALLUVIAL_NO_NUMBA      set to 1 to use the pure-numpy kernels

Config file keys: seed, out, count, k, repeats, weights, generator (an
object of GeneratorConfig fields) and layout (LayoutConfig fields).

Exit codes: 0 success, 2 usage error, 3 data or format error, 4 numeric
failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import zlib
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from . import bayes, stats, study
from .core import (
    S_A,
    WEIGHT_SETS,
    AlluvialDataset,
    ComplexityClass,
    ModelWeights,
    build_reports,
    classify_scores,
    extract_features,
    features_csv,
    read_features_csv,
    score,
)
from .errors import AlluvialError, EmptyInput, FormatError
from .generator import ENV_MAX_ATTEMPTS, GeneratorConfig, generate_corpus
from .layout import LayoutConfig, LayoutGeometry, layout, order_columns
from .render import RenderStyle, render_svg
from .schemas import check_file

REPRODUCE_CHARTS = 48


class UsageError(Exception):
    """Bad flags, config or environment; exits with status 2."""


def stage_rng(seed: int, stage: str) -> np.random.Generator:
    """Independent stream for a named pipeline stage."""
    ss = np.random.SeedSequence(seed, spawn_key=(zlib.crc32(stage.encode()),))
    return np.random.Generator(np.random.PCG64(ss))


# ---------------------------------------------------------------------------
# settings


def _load_config(args) -> dict:
    path = args.config or os.environ.get("ALLUVIAL_CONFIG")
    if not path:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    return data


def _setting(args, config, name, env=None, default=None, cast=str):
    flag = getattr(args, name, None)
    if flag is not None:
        return flag
    if env and os.environ.get(env, "").strip():
        try:
            return cast(os.environ[env])
        except ValueError as exc:
            raise UsageError(f"{env}={os.environ[env]!r} is invalid") from exc
    if name in config:
        return cast(config[name])
    return default


def _seed(args, config) -> int:
    return _setting(args, config, "seed", "ALLUVIAL_SEED", 0, int)


def _out(args, config, default=None):
    out = _setting(args, config, "out", "ALLUVIAL_OUT", default)
    if out is None:
        raise UsageError("--out is required")
    return Path(out)


def _dataclass_overrides(cls, section, where):
    if section is None:
        return {}
    if not isinstance(section, dict):
        raise UsageError(f"config '{where}' must be an object")
    names = {f.name for f in fields(cls)}
    unknown = set(section) - names
    if unknown:
        raise UsageError(f"unknown {where} setting(s): {', '.join(sorted(unknown))}")
    return {k: tuple(v) if isinstance(v, list) else v for k, v in section.items()}


def generator_config(args, config) -> GeneratorConfig:
    values = _dataclass_overrides(GeneratorConfig, config.get("generator"), "generator")
    if os.environ.get(ENV_MAX_ATTEMPTS, "").strip():
        values.pop("max_attempts", None)  # the field default reads the environment
    values["seed"] = _seed(args, config)
    if getattr(args, "max_attempts", None) is not None:
        values["max_attempts"] = args.max_attempts
    try:
        return GeneratorConfig(**values)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid generator settings: {exc}") from exc


def layout_config(config) -> LayoutConfig:
    values = _dataclass_overrides(LayoutConfig, config.get("layout"), "layout")
    try:
        return LayoutConfig(**values)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid layout settings: {exc}") from exc


def resolve_weights(spec: str) -> ModelWeights:
    """A published weight set by name or a weights.json path."""
    if spec in WEIGHT_SETS:
        return WEIGHT_SETS[spec]
    path = Path(spec)
    if not path.exists():
        raise UsageError(f"weights {spec!r} is neither {sorted(WEIGHT_SETS)} nor a file")
    try:
        return stats.load_weights(json.loads(path.read_text()))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{spec}: not a weights document ({exc})") from exc


# ---------------------------------------------------------------------------
# small I/O helpers


def _read_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from exc


def _read_dataset(path) -> AlluvialDataset:
    return AlluvialDataset.from_json(_read_text(path))


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=False) + "\n"


def _corpus_features(corpus, lcfg):
    orderings = [order_columns(d, lcfg) for d in corpus]
    return orderings, [extract_features(d, o) for d, o in zip(corpus, orderings)]


def read_target(text: str, column: str) -> dict[str, float]:
    """chart id -> value from a CSV with a ``chart`` (or ``id``) column."""
    reader = csv.DictReader(io.StringIO(text))
    key = "chart" if "chart" in (reader.fieldnames or []) else "id"
    if key not in (reader.fieldnames or []) or column not in reader.fieldnames:
        raise FormatError(f"target CSV needs columns chart and {column}")
    out = {}
    for lineno, row in enumerate(reader, start=2):
        cell = (row.get(column) or "").strip()
        if not cell:
            continue
        try:
            out[row[key]] = float(cell)
        except ValueError as exc:
            raise FormatError(f"row {lineno}: {cell!r} is not a number", [(lineno, str(exc))]) from exc
    return out


def _join(ids, feats, target: dict[str, float]):
    pairs = [(i, f, target[i]) for i, f in zip(ids, feats) if i in target]
    if not pairs:
        raise EmptyInput("no chart appears in both the feature and the target table")
    ids, feats, y = zip(*pairs)
    return list(ids), list(feats), list(y)


def weights_document(report: stats.CrossValReport) -> dict:
    return report.to_dict()


def classify_document(weights: ModelWeights, ev: bayes.EvalReport, label_source: str) -> dict:
    doc = {
        "weights": {"label": weights.label, **dict(zip(("w_t", "w_e", "w_f", "w_c"), weights.as_tuple()))},
        "labels_from": label_source,
    }
    doc.update(ev.to_dict())
    return doc


def accuracy_labels(values) -> list[ComplexityClass]:
    """Tertile-style bins on accuracy: the least accurate charts are Hard."""
    return classify_scores([-v for v in values])


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate(args, config):
    gcfg = generator_config(args, config)
    count = _setting(args, config, "count", None, 1, int)
    out = _out(args, config)
    corpus = generate_corpus(gcfg, count)
    _, feats = _corpus_features(corpus, layout_config(config))
    for d in corpus:
        _write(out / f"{d.id}.json", d.to_json())
    reports = build_reports(feats, S_A, [d.id for d in corpus])
    _write(out / "corpus_features.csv", features_csv(reports))
    print(f"wrote {count} chart(s) and corpus_features.csv to {out}")


def cmd_layout(args, config):
    d = _read_dataset(args.input)
    geom = layout(d, layout_config(config))
    _write(_out(args, config), geom.to_json())


def cmd_render(args, config):
    d = _read_dataset(args.input)
    lcfg = layout_config(config)
    if args.layout:
        try:
            geom = LayoutGeometry.from_dict(json.loads(_read_text(args.layout)))
        except json.JSONDecodeError as exc:
            raise FormatError(f"{args.layout}: invalid JSON ({exc})") from exc
        if len(geom.flow_ribbons) != len(d.flows) or [len(c) for c in geom.entity_rects] != list(d.columns):
            raise FormatError(f"{args.layout} does not match {args.input}")
    else:
        geom = layout(d, lcfg)
    style = RenderStyle(width=int(geom.width), height=int(geom.height))
    _write(_out(args, config), render_svg(geom, style))


def _gather_charts(paths) -> list[AlluvialDataset]:
    files = []
    for p in map(Path, paths):
        if p.is_dir():
            files += sorted(f for f in p.glob("*.json") if not f.name.endswith(".layout.json"))
        else:
            files.append(p)
    if not files:
        raise EmptyInput("no chart files given")
    return [_read_dataset(f) for f in files]


def cmd_score(args, config):
    weights = resolve_weights(_setting(args, config, "weights", None, "S_a"))
    if args.features:
        ids, feats = read_features_csv(_read_text(args.features))
    else:
        corpus = _gather_charts(args.input)
        _, feats = _corpus_features(corpus, layout_config(config))
        ids = [d.id for d in corpus]
    if not feats:
        raise EmptyInput("nothing to score")
    text = features_csv(build_reports(feats, weights, ids))
    if args.out or os.environ.get("ALLUVIAL_OUT") or "out" in config:
        _write(_out(args, config), text)
    else:
        sys.stdout.write(text)


def cmd_study_accuracy(args, config):
    responses = study.ingest_study1(_read_text(args.input) if args.input != "-" else sys.stdin.read())
    table = study.accuracy_table(responses, exclude=args.exclude or ())
    _write(_out(args, config), table.to_csv())
    for task, s in table.overall.items():
        print(f"{task}: {100 * s.accuracy:.2f} +/- {100 * s.standard_error:.2f} (n={s.n_responses})")


def cmd_study_perceived(args, config):
    responses = study.ingest_study2(_read_text(args.input) if args.input != "-" else sys.stdin.read())
    scores = study.perceived_complexity(responses)
    for chart in args.exclude or ():
        scores.pop(chart, None)
    _write(_out(args, config), study.perceived_csv(scores))


def cmd_fit(args, config):
    ids, feats = read_features_csv(_read_text(args.features))
    target = read_target(_read_text(args.target), args.column)
    ids, feats, y = _join(ids, feats, target)
    k = _setting(args, config, "k", None, 5, int)
    repeats = _setting(args, config, "repeats", None, 10, int)
    label = args.column if args.column in ("Acc3", "Acc4") else ("Svc" if args.column == "perceived" else "custom")
    report = stats.fit_weights(feats, y, k=k, repeats=repeats, seed=_seed(args, config), label=label)
    _write(_out(args, config), _dump_json(weights_document(report)))
    w, sd = report.weight_mean, report.weight_sd
    print(
        f"{label}: " + ", ".join(f"{n}={m:.3f}+/-{s:.3f}" for n, m, s in zip("tefc", w, sd))
        + f"; R^2={report.r_squared_mean:.3f}"
    )


def cmd_classify(args, config):
    ids, feats = read_features_csv(_read_text(args.features))
    weights = resolve_weights(_setting(args, config, "weights", None, "Svc"))
    labels, source = None, "score"
    if args.label_target:
        target = read_target(_read_text(args.label_target), args.column or "Acc3")
        ids, feats, y = _join(ids, feats, target)
        labels, source = accuracy_labels(y), "accuracy"
    k = _setting(args, config, "k", None, 5, int)
    repeats = _setting(args, config, "repeats", None, 10, int)
    ev = bayes.evaluate(feats, ids, weights, k=k, repeats=repeats, seed=_seed(args, config), labels=labels)
    _write(_out(args, config), _dump_json(classify_document(weights, ev, source)))
    print(f"accuracy={ev.accuracy_mean:.3f}+/-{ev.accuracy_sd:.3f} rmse={ev.rmse_mean:.3f}+/-{ev.rmse_sd:.3f}")


def cmd_check(args, config):
    files = []
    for p in map(Path, args.paths):
        files += sorted(f for f in p.rglob("*") if f.is_file() and not f.name.endswith(".partial")) if p.is_dir() else [p]
    if not files:
        raise EmptyInput("no files to check")
    bad = 0
    for f in files:
        if f.suffix not in (".json", ".csv", ".svg"):
            continue
        kind, problems = check_file(f)
        if problems:
            bad += 1
            print(f"FAIL {f} ({kind})")
            for msg in problems[:10]:
                print(f"  {msg}")
        elif args.verbose:
            print(f"ok   {f} ({kind})")
    print(f"checked {len(files)} file(s), {bad} invalid")
    if bad:
        raise FormatError(f"{bad} file(s) failed validation")


# ---------------------------------------------------------------------------
# reproduce


class _Artifacts:
    """Writes every file as NAME.partial and renames all of them on commit."""

    def __init__(self, root: Path):
        self.root = root
        self.names: list[str] = []

    def write(self, name: str, text: str):
        path = self.root / (name + ".partial")
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        self.names.append(name)

    def commit(self):
        for name in self.names:
            os.replace(self.root / (name + ".partial"), self.root / name)


def histogram_csv(values, bins: int = 10) -> str:
    counts, edges = np.histogram(np.asarray(values, dtype=float), bins=bins)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bin_low", "bin_high", "count"])
    for lo, hi, n in zip(edges[:-1], edges[1:], counts):
        w.writerow([f"{lo:.10g}", f"{hi:.10g}", int(n)])
    return buf.getvalue()


def synthetic_study(ids, feats, seed: int):
    """Study tables from planted models: Acc4 drives difficulty, Svc drives perception."""
    difficulty = np.array([r.normalized_score for r in build_reports(feats, WEIGHT_SETS["Acc4"])])
    complexity = [score(fv, WEIGHT_SETS["Svc"]) for fv in feats]
    s1 = study.simulate_study1(ids, difficulty, stage_rng(seed, "study1"))
    s2 = study.simulate_study2(ids, complexity, stage_rng(seed, "study2"))
    return study.study1_csv(s1), study.study2_csv(s2)


def run_pipeline(seed, out: Path, gcfg, lcfg, study1_text=None, study2_text=None, k=5, repeats=10, log=print):
    """Every reproduce stage; returns the summary dict. Raises (stage, exc) on failure."""
    art = _Artifacts(out)
    summary = {"seed": seed, "charts": REPRODUCE_CHARTS, "stages": {}, "artifacts": art.names}
    stage = "generate"
    try:
        corpus = generate_corpus(replace(gcfg, seed=seed), REPRODUCE_CHARTS)
        for d in corpus:
            art.write(f"corpus/{d.id}.json", d.to_json())
        summary["stages"]["generate"] = "ok"

        stage = "layout"
        geoms = [layout(d, lcfg) for d in corpus]
        for d, g in zip(corpus, geoms):
            art.write(f"layouts/{d.id}.layout.json", g.to_json())
        feats = [extract_features(d, g.orderings) for d, g in zip(corpus, geoms)]
        ids = [d.id for d in corpus]
        summary["stages"]["layout"] = "ok"

        stage = "features"
        reports = build_reports(feats, S_A, ids)
        features_text = features_csv(reports)
        art.write("corpus_features.csv", features_text)
        sa = [r.raw_score for r in reports]
        art.write("sa_histogram.csv", histogram_csv(sa))
        summary["stages"]["features"] = "ok"
        summary["sa"] = {"min": min(sa), "max": max(sa), "mean": float(np.mean(sa))}

        stage = "render"
        style = RenderStyle(width=int(lcfg.canvas_width_px), height=int(lcfg.canvas_height_px))
        for d, g in zip(corpus, geoms):
            art.write(f"svg/{d.id}.svg", render_svg(g, style))
        summary["stages"]["render"] = "ok"

        if study1_text is None and study2_text is None:
            for name in ("study", "fit", "classify"):
                log(f"{name}: skipped: no study data")
                summary["stages"][name] = "skipped: no study data"
        else:
            stage = "study"
            targets = {}
            if study1_text is not None:
                table = study.accuracy_table(study.ingest_study1(study1_text))
                art.write("study/accuracy.csv", table.to_csv())
                targets["Acc3"], targets["Acc4"] = table.acc3, table.acc4
            if study2_text is not None:
                perceived = study.perceived_complexity(study.ingest_study2(study2_text), ids)
                art.write("study/perceived.csv", study.perceived_csv(perceived))
                targets["Svc"] = {c: float(v) for c, v in perceived.items()}
            summary["stages"]["study"] = "ok"

            stage = "fit"
            fitted = {}
            summary["fits"] = {}
            for label, target in targets.items():
                fids, ffeats, y = _join(ids, feats, target)
                rep = stats.fit_weights(ffeats, y, k=k, repeats=repeats, seed=seed, label=label)
                art.write(f"fit/weights_{label}.json", _dump_json(weights_document(rep)))
                fitted[label] = (rep.weights, fids, ffeats)
                summary["fits"][label] = {
                    "weights": [float(w) for w in rep.weight_mean],
                    "r_squared": rep.r_squared_mean,
                }
            summary["stages"]["fit"] = "ok"

            stage = "classify"
            summary["classify"] = {}
            for label, (weights, fids, ffeats) in fitted.items():
                ev = bayes.evaluate(ffeats, fids, weights, k=k, repeats=repeats, seed=seed)
                art.write(f"classify/report_{label}.json", _dump_json(classify_document(weights, ev, "score")))
                summary["classify"][label] = {"accuracy": ev.accuracy_mean, "rmse": ev.rmse_mean}
            summary["stages"]["classify"] = "ok"

        stage = "summary"
        summary["artifacts"] = sorted(art.names) + ["summary.json"]
        art.write("summary.json", _dump_json(summary))
    except Exception as exc:
        raise PipelineError(stage, exc) from exc
    art.commit()
    return summary


class PipelineError(Exception):
    def __init__(self, stage, cause):
        super().__init__(f"stage {stage} failed: {cause}")
        self.stage = stage
        self.cause = cause


def cmd_reproduce(args, config):
    seed = _seed(args, config)
    out = _out(args, config, "reproduce_out")
    gcfg = generator_config(args, config)
    lcfg = layout_config(config)
    s1 = _read_text(args.study1) if args.study1 else None
    s2 = _read_text(args.study2) if args.study2 else None
    if args.simulate_study:
        if s1 or s2:
            raise UsageError("--simulate-study cannot be combined with study CSVs")
        corpus = generate_corpus(replace(gcfg, seed=seed), REPRODUCE_CHARTS)
        _, feats = _corpus_features(corpus, lcfg)
        s1, s2 = synthetic_study([d.id for d in corpus], feats, seed)
    k = _setting(args, config, "k", None, 5, int)
    repeats = _setting(args, config, "repeats", None, 10, int)
    try:
        summary = run_pipeline(seed, out, gcfg, lcfg, s1, s2, k=k, repeats=repeats)
    except PipelineError as exc:
        cause = exc.cause
        code = cause.exit_code if isinstance(cause, AlluvialError) else 4 if isinstance(cause, ArithmeticError) else 3
        print(f"error: {exc} (partial artifacts kept as *.partial)", file=sys.stderr)
        return code
    print(f"reproduce: {len(summary['artifacts'])} artifacts in {out}")
    return 0


# ---------------------------------------------------------------------------
# parser


def _global_flags(default) -> argparse.ArgumentParser:
    # subcommands repeat the global flags; SUPPRESS keeps them from
    # clobbering values given before the subcommand name
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=default, help="master seed (env ALLUVIAL_SEED; default 0)")
    p.add_argument("--out", default=default, help="output file or directory (env ALLUVIAL_OUT)")
    p.add_argument("--config", default=default, help="JSON config file (env ALLUVIAL_CONFIG)")
    return p


def build_parser() -> argparse.ArgumentParser:
    top = _global_flags(None)
    common = _global_flags(argparse.SUPPRESS)

    parser = argparse.ArgumentParser(
        prog="alluvial-lab",
        description="Synthetic alluvial diagrams, complexity scoring and study analysis.",
        epilog=__doc__.split("\n\n", 1)[1],
        formatter_class=argparse.RawDescriptionHelpFormatter,
        parents=[top],
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("generate", parents=[common], help="generate a seeded corpus of charts")
    p.add_argument("--count", type=int, default=None, help="number of charts (default 1)")
    p.add_argument("--max-attempts", type=int, default=None, help="retry budget per chart")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("layout", parents=[common], help="compute the layout of one chart")
    p.add_argument("--in", dest="input", required=True)
    p.set_defaults(func=cmd_layout)

    p = sub.add_parser("render", parents=[common], help="render one chart to SVG")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--layout", default=None, help="precomputed layout JSON")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("score", parents=[common], help="feature table and scores for charts")
    p.add_argument("--in", dest="input", nargs="*", default=[], help="chart JSON files or directories")
    p.add_argument("--features", default=None, help="score an existing feature CSV instead")
    p.add_argument("--weights", default=None, help="S_a, Acc3, Acc4, Svc or a weights.json path")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("study", help="study response aggregation")
    ssub = p.add_subparsers(dest="study_command", metavar="KIND")
    ssub.required = True
    for name, func, helptext in (
        ("accuracy", cmd_study_accuracy, "per chart task accuracy from Study 1 CSV"),
        ("perceived", cmd_study_perceived, "perceived complexity from Study 2 CSV"),
    ):
        q = ssub.add_parser(name, parents=[common], help=helptext)
        q.add_argument("--in", dest="input", required=True, help="CSV path, or - for stdin")
        q.add_argument("--exclude", nargs="*", default=None, help="chart ids to drop")
        q.set_defaults(func=func)

    p = sub.add_parser("fit", parents=[common], help="cross-validated weight fit")
    p.add_argument("--features", required=True)
    p.add_argument("--target", required=True, help="CSV with a chart column")
    p.add_argument("--column", required=True, help="target column, e.g. Acc3, Acc4 or perceived")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--repeats", type=int, default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("classify", parents=[common], help="Bayesian easy/medium/hard evaluation")
    p.add_argument("--features", required=True)
    p.add_argument("--weights", default=None, help="S_a, Acc3, Acc4, Svc or a weights.json path")
    p.add_argument("--label-target", default=None, help="label charts by accuracy tertiles from this CSV")
    p.add_argument("--column", default=None, help="accuracy column for --label-target (default Acc3)")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--repeats", type=int, default=None)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("reproduce", parents=[common], help="run the whole pipeline")
    p.add_argument("--study1", default=None, help="Study 1 responses CSV")
    p.add_argument("--study2", default=None, help="Study 2 responses CSV")
    p.add_argument("--simulate-study", action="store_true", help="use synthetic responses from planted models")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--repeats", type=int, default=None)
    p.add_argument("--max-attempts", type=int, default=None)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("check", parents=[common], help="validate output files against their schemas")
    p.add_argument("paths", nargs="+")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args)
        status = args.func(args, config)
    except UsageError as exc:
        print(f"alluvial-lab: error: {exc}", file=sys.stderr)
        return 2
    except AlluvialError as exc:
        print(f"alluvial-lab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"alluvial-lab: {exc}", file=sys.stderr)
        return 3
    return status or 0


if __name__ == "__main__":
    sys.exit(main())
