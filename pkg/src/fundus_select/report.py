"""Leaderboard rendering in table, CSV and JSON form.

By default rows keep the order the records were supplied in, so a
rendered stage lines up with the source table and its Rank column.
"""

from __future__ import annotations

import csv
import io
import json

from .metrics import METRIC_NAMES, MetricSet
from .ranking import (
    LeaderboardEntry,
    RankVector,
    RunRecord,
    ScoreBreakdown,
    StageResult,
    TiePolicy,
)
from .validation import ValidationError

__all__ = ["FORMATS", "TABLE_COLUMNS", "render_report", "result_to_dict", "result_from_json"]

FORMATS = ("table", "csv", "json")
TABLE_COLUMNS = ("Model", "Overfitting", "Validation acc.", "Loss", "Sensitivity", "Specificity", "Rank", "Score")
_RANK_NAMES = ("overfit_rank", "accuracy_rank", "loss_rank", "sensitivity_rank", "specificity_rank")
_TERM_NAMES = ("overfit_term", "accuracy_term", "loss_term", "sensitivity_term", "specificity_term")


def _fmt(value) -> str:
    return f"{value:.4f}"


def _fmt_rank(value) -> str:
    return str(int(value)) if float(value).is_integer() else f"{value:.1f}"


def _weights_text(weights) -> str:
    return ", ".join(f"{w:g}" for w in weights)


def _ordered(result: StageResult, order: str) -> list:
    if order == "input":
        return result.rows_in_input_order()
    if order == "rank":
        return list(result.entries)
    raise ValidationError(f"unknown row order {order!r}; expected 'input' or 'rank'")


def _render_table(result: StageResult, order: str) -> str:
    rows = []
    for e in _ordered(result, order):
        rows.append(
            [e.model_name, *(_fmt(v) for v in e.record.metrics.as_tuple()), str(e.final_rank), _fmt(e.score.total)]
        )
    widths = [max(len(col), *(len(r[i]) for r in rows)) for i, col in enumerate(TABLE_COLUMNS)]

    def line(cells):
        first = cells[0].ljust(widths[0])
        rest = [c.rjust(w) for c, w in zip(cells[1:], widths[1:])]
        return "  ".join([first, *rest]).rstrip()

    out = []
    if result.stage_id:
        out.append(f"Stage: {result.stage_id}")
    out.append(line(TABLE_COLUMNS))
    out.append("  ".join("-" * w for w in widths))
    out.extend(line(r) for r in rows)
    out.append("")
    out.append(f"Winner: {result.winner}")
    out.append(
        f"N = {result.stage_size}; weights = ({_weights_text(result.weights)}); "
        f"tie policy = {result.tie_policy.value}"
    )
    return "\n".join(out) + "\n"


def _render_csv(result: StageResult, order: str) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["model", *METRIC_NAMES, "params", *_RANK_NAMES, *_TERM_NAMES, "total", "rank"])
    for e in _ordered(result, order):
        writer.writerow(
            [
                e.model_name,
                *(_fmt(v) for v in e.record.metrics.as_tuple()),
                "" if e.record.param_count is None else e.record.param_count,
                *(_fmt_rank(r) for r in e.ranks.as_tuple()),
                *(_fmt(t) for t in e.score.terms()),
                _fmt(e.score.total),
                e.final_rank,
            ]
        )
    return buf.getvalue()


def result_to_dict(result: StageResult) -> dict:
    """Plain-data form of a result at full float precision."""
    return {
        "stage_id": result.stage_id,
        "stage_size": result.stage_size,
        "tie_policy": result.tie_policy.value,
        "weights": list(result.weights),
        "winner": result.winner,
        "config": result.config,
        "rows": [
            {
                "model": e.model_name,
                "metrics": e.record.metrics.as_dict(),
                "params": e.record.param_count,
                "ranks": dict(zip(_RANK_NAMES, e.ranks.as_tuple())),
                "terms": dict(zip(_TERM_NAMES, e.score.terms())),
                "total": e.score.total,
                "rank": e.final_rank,
            }
            for e in result.rows_in_input_order()
        ],
    }


def result_from_json(text: str) -> StageResult:
    """Inverse of ``render_report(result, "json")``."""
    try:
        doc = json.loads(text)
        weights = tuple(doc["weights"])
        n = doc["stage_size"]
        entries = []
        for row in doc["rows"]:
            record = RunRecord(row["model"], MetricSet(**row["metrics"]), row["params"])
            ranks = RankVector(**row["ranks"])
            score = ScoreBreakdown(**row["terms"], total=row["total"], weights=weights, stage_size=n)
            entries.append(LeaderboardEntry(record, ranks, score, row["rank"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"invalid result document: {exc}") from None
    input_order = tuple(e.model_name for e in entries)
    entries.sort(key=lambda e: e.final_rank)
    return StageResult(
        entries=tuple(entries),
        tie_policy=TiePolicy.parse(doc["tie_policy"]),
        weights=weights,
        input_order=input_order,
        stage_id=doc.get("stage_id"),
        config=doc.get("config"),
    )


def render_report(result: StageResult, format: str = "table", order: str = "input") -> str:
    """Render ``result``; ``order`` is ``"input"`` (source row order) or ``"rank"``.

    JSON always uses input order and keeps full float precision.
    """
    if format == "table":
        return _render_table(result, order)
    if format == "csv":
        return _render_csv(result, order)
    if format == "json":
        return json.dumps(result_to_dict(result), indent=2) + "\n"
    raise ValidationError(f"unknown format {format!r}; expected one of {', '.join(FORMATS)}")
