"""Command-line entry point: ``fundus-select <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .augment import TARGET_SIZE, augment_image, default_orient_specs, prepare_image
from .datasetplan import (
    AugmentationPlan,
    ClassSource,
    SplitSpec,
    allocate_split,
    augmented_count,
    build_manifest,
    class_totals,
    reference_sources,
    replication_factor,
)
from .io import (
    FIXTURE_FILES,
    load_plan_config,
    load_predictions,
    load_runs,
    load_verification,
    manifest_to_json,
    parse_decimal,
    read_pnm,
    write_fixtures,
    write_ppm,
)
from .metrics import (
    CCE_EPSILON,
    METRIC_NAMES,
    accuracy,
    confusion_from_predictions,
    loss_value,
    overfitting,
    relative_comparison,
    sensitivity,
    specificity,
)
from .protocol import DEFAULT_TOLERANCE, StageConfig, run_stage, verify_generalization
from .ranking import DEFAULT_WEIGHTS, TiePolicy, rank_stage
from .report import FORMATS, render_report
from .validation import ValidationError

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VERIFY_FAILED = 3


def _floats(text: str, count: int, what: str) -> tuple:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != count:
        raise ValidationError(f"{what}: expected {count} comma-separated numbers, got {text!r}")
    return tuple(parse_decimal(p, what) for p in parts)


def _source(text: str):
    """``NAME:LABEL:COUNT[:B[:C]]``"""
    parts = text.split(":")
    if not 3 <= len(parts) <= 5:
        raise ValidationError(f"--source {text!r}: expected NAME:LABEL:COUNT[:B[:C]]")
    try:
        numbers = [int(p) for p in parts[2:]]
    except ValueError:
        raise ValidationError(f"--source {text!r}: COUNT, B and C must be integers") from None
    b = numbers[1] if len(numbers) > 1 else 1
    c = numbers[2] if len(numbers) > 2 else 0
    return ClassSource(parts[0], parts[1], numbers[0]), AugmentationPlan(b, c)


def _sources(args) -> list:
    if args.config:
        return load_plan_config(args.config)
    if args.source:
        return [_source(s) for s in args.source]
    if args.reference:
        return reference_sources()
    raise ValidationError("give --config, --source or --reference")


def _add_source_flags(p) -> None:
    p.add_argument("--config", type=Path, help="JSON plan config with a 'sources' list")
    p.add_argument("--source", action="append", metavar="NAME:LABEL:COUNT[:B[:C]]", help="repeatable")
    p.add_argument("--reference", action="store_true", help="use the four reference glaucoma/retinopathy sources")


def _add_ranking_flags(p) -> None:
    p.add_argument("--runs", type=Path, required=True, help="run-record CSV")
    p.add_argument("--config", type=Path, help="stage config JSON; checks records against its candidates")
    p.add_argument("--tie-policy", default="ordinal", choices=[t.value for t in TiePolicy])
    p.add_argument("--weights", help="five comma-separated weights (default 3,2,1.5,1,0.25)")
    p.add_argument("--format", default="table", choices=FORMATS)


def _stage_result(args):
    records = load_runs(args.runs)
    weights = _floats(args.weights, 5, "--weights") if args.weights else DEFAULT_WEIGHTS
    if args.config:
        return run_stage(StageConfig.load(args.config), records, args.tie_policy, weights)
    return rank_stage(records, args.tie_policy, weights)


def cmd_rank(args, out) -> int:
    out.write(render_report(_stage_result(args), args.format, order="rank"))
    return EXIT_OK


def cmd_report(args, out) -> int:
    text = render_report(_stage_result(args), args.format, order="input")
    if args.out:
        args.out.write_text(text, encoding="utf-8")
    else:
        out.write(text)
    return EXIT_OK


def _pick(records, name, path):
    if name is None:
        if len(records) != 1:
            raise ValidationError(f"{path} has {len(records)} records; choose one with a model flag")
        return records[0]
    for r in records:
        if r.model_name == name:
            return r
    raise ValidationError(f"{path}: no model named {name!r}")


def _pct(value) -> str:
    return "undefined" if value is None else f"{value:+.4%}"


def cmd_metrics(args, out) -> int:
    if args.predictions:
        records = load_predictions(args.predictions)
        cm = confusion_from_predictions(records, args.threshold)
        out.write(f"records      {cm.total}\n")
        out.write(f"tp fn tn fp  {cm.tp} {cm.fn_} {cm.tn} {cm.fp}\n")
        out.write(f"accuracy     {accuracy(cm):.4f}\n")
        for name, fn in (("sensitivity", sensitivity), ("specificity", specificity)):
            try:
                out.write(f"{name:<12} {fn(cm):.4f}\n")
            except ValidationError as exc:
                out.write(f"{name:<12} undefined ({exc})\n")
        if args.train_accuracy is not None:
            out.write(f"overfitting  {overfitting(args.train_accuracy, accuracy(cm)):.4f}\n")
        for kind in ("CCE", "MSE", "MAE"):
            out.write(f"loss {kind}     {loss_value(records, kind):.4f}\n")
        return EXIT_OK

    final = _pick(load_runs(args.final), args.final_model, args.final)
    baseline = _pick(load_runs(args.baseline), args.baseline_model, args.baseline)
    report = relative_comparison(final.metrics, baseline.metrics)
    out.write(f"final {final.model_name!r} vs baseline {baseline.model_name!r}\n")
    for name in METRIC_NAMES:
        out.write(
            f"{name:<13} |delta| {report.abs_delta[name]:.4f}  relative {_pct(report.relative_change[name])}\n"
        )
    ratio = "undefined" if report.loss_ratio is None else f"{report.loss_ratio:.4f}"
    out.write(f"loss ratio (baseline / final) {ratio}\n")
    return EXIT_OK


def cmd_plan(args, out) -> int:
    pairs = _sources(args)
    for source, plan in pairs:
        out.write(
            f"{source.source_name} ({source.label.value}): {source.image_count} x "
            f"{plan.b} x ({plan.c}+1) = {augmented_count(source, plan)}"
            f"  [factor {replication_factor(plan)}]\n"
        )
    healthy, diseased, grand = class_totals(pairs)
    out.write(f"healthy {healthy}\ndiseased {diseased}\ntotal {grand}\n")
    return EXIT_OK


def cmd_split(args, out) -> int:
    spec = SplitSpec.parse(args.fractions)
    if args.total is not None:
        out.write(" ".join(str(n) for n in allocate_split(args.total, spec)) + "\n")
        return EXIT_OK
    manifest = build_manifest(_sources(args), spec, args.seed)
    text = manifest_to_json(manifest)
    if args.manifest:
        args.manifest.write_text(text, encoding="utf-8")
        out.write(" ".join(str(n) for n in manifest.split_counts()) + "\n")
    else:
        out.write(text)
    return EXIT_OK


def cmd_augment(args, out) -> int:
    img = read_pnm(args.input)
    img = prepare_image(img, args.size) if args.size else img[:, :, :3]
    plan = AugmentationPlan(args.b, args.c)
    variants = augment_image(img, plan, default_orient_specs(args.b, args.fill), args.seed)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    stem = args.input.stem
    for i, variant in enumerate(variants):
        target = args.out_dir / f"{stem}_v{i:03d}.ppm"
        write_ppm(variant, target)
        out.write(f"{target}\n")
    return EXIT_OK


def cmd_verify(args, out) -> int:
    if args.file:
        val, test = load_verification(args.file)
    else:
        if not (args.val and args.test):
            raise ValidationError("give --file or both --val and --test")
        val = _floats(args.val, 3, "--val")
        test = _floats(args.test, 3, "--test")
    report = verify_generalization(val, test, args.tolerance)
    for name, v, t, d in report.rows():
        out.write(f"{name:<12} val {v:.4f}  test {t:.4f}  |delta| {d:.4f}\n")
    out.write(f"tolerance {report.tolerance:g}\n")
    out.write("PASS\n" if report.passed else "FAIL\n")
    return EXIT_OK if report.passed else EXIT_VERIFY_FAILED


def cmd_fixtures(args, out) -> int:
    for path in write_fixtures(args.out):
        out.write(f"{path}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fundus-select",
        description="Rank candidate models by weighted per-metric ranks and plan the data pipeline.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("rank", help="print a stage leaderboard, best model first")
    _add_ranking_flags(p)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("report", help="render a stage in source row order with its Rank column")
    _add_ranking_flags(p)
    p.add_argument("--out", type=Path, help="write to a file instead of stdout")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser(
        "metrics",
        help="metrics from a prediction log, or a final-vs-baseline comparison",
        description=f"CCE clamps the true-class probability to [{CCE_EPSILON:g}, 1] before the log.",
    )
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--predictions", type=Path, help="prediction log CSV")
    src.add_argument("--final", type=Path, help="run CSV holding the final model")
    p.add_argument("--threshold", type=float, default=0.5, help="diseased iff p_diseased >= threshold")
    p.add_argument("--train-accuracy", type=float, help="also report overfitting against this")
    p.add_argument("--baseline", type=Path, help="run CSV holding the baseline model")
    p.add_argument("--final-model", help="model name in --final (needed if it has several rows)")
    p.add_argument("--baseline-model", help="model name in --baseline")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("plan", help="augmentation and class-balance arithmetic")
    _add_source_flags(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("split", help="train/val/test counts, or a full seeded manifest")
    p.add_argument("--total", type=int, help="just print the three split counts for this total")
    p.add_argument("--fractions", default="0.6,0.2,0.2")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--manifest", type=Path, help="write the manifest JSON here")
    _add_source_flags(p)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("augment", help="write the b(c+1) variants of one PPM/PAM image")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--b", type=int, default=1)
    p.add_argument("--c", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fill", type=int, default=0)
    p.add_argument("--size", type=int, default=TARGET_SIZE, help="resize to SIZE x SIZE first; 0 keeps the size")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("verify", help="validation vs test generalization check")
    p.add_argument("--val", help="accuracy,sensitivity,specificity")
    p.add_argument("--test", help="accuracy,sensitivity,specificity")
    p.add_argument("--file", type=Path, help="verification CSV instead of --val/--test")
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fixtures", help=f"write the bundled CSVs ({', '.join(FIXTURE_FILES)})")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_fixtures)
    return parser


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "metrics" and args.final and not args.baseline:
        err.write("fundus-select: error: --final needs --baseline\n")
        return EXIT_ERROR
    try:
        return args.func(args, out)
    except (ValidationError, OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        err.write(f"fundus-select: error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
