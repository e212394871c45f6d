"""Weighted rank aggregation for choosing one model out of a stage.

Every candidate is ranked on each of five metrics (largest value gets
rank 1). The overall score rewards a *high* rank number for the two
undesirable metrics (overfitting, loss) and a *low* rank number for the
three desirable ones::

    score = 3 * overfit_rank
          + 2 * (N + 1 - accuracy_rank)
          + 1.5 * loss_rank
          + 1 * (N + 1 - sensitivity_rank)
          + 0.25 * (N + 1 - specificity_rank)

The highest score wins; equal scores go to the model with fewer
parameters.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .metrics import METRIC_NAMES, MetricSet
from .validation import ValidationError

__all__ = [
    "DEFAULT_WEIGHTS",
    "TiePolicy",
    "RunRecord",
    "RankVector",
    "ScoreBreakdown",
    "LeaderboardEntry",
    "StageResult",
    "metric_ranks",
    "overall_score",
    "rank_stage",
    "OverallScoreRanker",
]

DEFAULT_WEIGHTS = (3.0, 2.0, 1.5, 1.0, 0.25)

# True where a larger rank number is better for the model (undesirable metric).
_RAW_RANK = (True, False, True, False, False)
_TERM_NAMES = ("overfit_term", "accuracy_term", "loss_term", "sensitivity_term", "specificity_term")


class TiePolicy(str, enum.Enum):
    ORDINAL = "ordinal"
    AVERAGE = "average"
    COMPETITION = "competition"

    @classmethod
    def parse(cls, value) -> "TiePolicy":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            choices = ", ".join(p.value for p in cls)
            raise ValidationError(f"unknown tie policy {value!r}; expected one of {choices}") from None


@dataclass(frozen=True)
class RunRecord:
    model_name: str
    metrics: MetricSet
    param_count: Optional[int] = None

    def __post_init__(self):
        if not isinstance(self.model_name, str) or not self.model_name.strip():
            raise ValidationError("model_name must be a non-empty string")
        if not isinstance(self.metrics, MetricSet):
            raise ValidationError(f"{self.model_name}: metrics must be a MetricSet")
        pc = self.param_count
        if pc is not None and (isinstance(pc, bool) or not isinstance(pc, (int, np.integer)) or pc < 0):
            raise ValidationError(f"{self.model_name}: param_count={pc!r} must be a non-negative integer")


@dataclass(frozen=True)
class RankVector:
    overfit_rank: float
    accuracy_rank: float
    loss_rank: float
    sensitivity_rank: float
    specificity_rank: float

    def as_tuple(self) -> tuple:
        return (
            self.overfit_rank,
            self.accuracy_rank,
            self.loss_rank,
            self.sensitivity_rank,
            self.specificity_rank,
        )


@dataclass(frozen=True)
class ScoreBreakdown:
    overfit_term: float
    accuracy_term: float
    loss_term: float
    sensitivity_term: float
    specificity_term: float
    total: float
    weights: tuple
    stage_size: int

    def terms(self) -> tuple:
        return tuple(getattr(self, name) for name in _TERM_NAMES)


@dataclass(frozen=True)
class LeaderboardEntry:
    record: RunRecord
    ranks: RankVector
    score: ScoreBreakdown
    final_rank: int

    @property
    def model_name(self) -> str:
        return self.record.model_name


@dataclass(frozen=True)
class StageResult:
    """Leaderboard for one stage, best model first.

    ``input_order`` lists model names in the order the records were given,
    which is how the published tables lay out their rows.
    """

    entries: tuple
    tie_policy: TiePolicy
    weights: tuple
    input_order: tuple
    stage_id: Optional[str] = None
    config: Optional[dict] = field(default=None, compare=False)

    @property
    def winner(self) -> str:
        return self.entries[0].model_name

    @property
    def stage_size(self) -> int:
        return len(self.entries)

    def entry(self, model_name: str) -> LeaderboardEntry:
        for e in self.entries:
            if e.model_name == model_name:
                return e
        raise KeyError(model_name)

    def rows_in_input_order(self) -> list:
        by_name = {e.model_name: e for e in self.entries}
        return [by_name[name] for name in self.input_order]

    def final_ranks(self) -> list:
        """Final ranks aligned with ``input_order``."""
        return [e.final_rank for e in self.rows_in_input_order()]


def _check_weights(weights) -> tuple:
    weights = tuple(float(w) for w in weights)
    if len(weights) != 5:
        raise ValidationError(f"expected 5 weights, got {len(weights)}")
    for i, w in enumerate(weights):
        if not math.isfinite(w) or w < 0:
            raise ValidationError(f"weight {i}={w!r} must be a non-negative finite number")
    return weights


def metric_ranks(values: Sequence[float], tie_policy=TiePolicy.ORDINAL) -> list:
    """Rank values so the largest gets 1 and the smallest gets N.

    Output is aligned with the input. Under ``ordinal`` equal values take
    consecutive ranks in input order, ``average`` gives each the mean of
    the ranks they span, ``competition`` gives each the smallest.
    """
    policy = TiePolicy.parse(tie_policy)
    values = list(values)
    if not values:
        raise ValidationError("cannot rank an empty list")
    for i, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, (int, float, np.integer, np.floating)) or not math.isfinite(v):
            raise ValidationError(f"value at index {i} is not a finite number: {v!r}")

    # Stable sort keeps input order inside each group of equal values.
    order = sorted(range(len(values)), key=lambda i: -values[i])
    ranks: list = [0] * len(values)
    pos = 0
    while pos < len(order):
        end = pos
        while end + 1 < len(order) and values[order[end + 1]] == values[order[pos]]:
            end += 1
        for offset, idx in enumerate(order[pos : end + 1]):
            if policy is TiePolicy.ORDINAL:
                ranks[idx] = pos + offset + 1
            elif policy is TiePolicy.COMPETITION:
                ranks[idx] = pos + 1
            else:
                ranks[idx] = (pos + 1 + end + 1) / 2
        pos = end + 1
    return ranks


def overall_score(
    ranks: RankVector, n: int, weights=DEFAULT_WEIGHTS, shift: Optional[float] = None
) -> ScoreBreakdown:
    """Weighted score of one model's rank vector in a stage of ``n`` models.

    ``shift`` replaces the ``N + 1`` constant in the three desirable-metric
    terms; it defaults to ``n + 1``. Any constant yields the same ordering.
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise ValidationError(f"stage size must be a positive integer, got {n!r}")
    weights = _check_weights(weights)
    rank_values = ranks.as_tuple()
    for name, r in zip(("overfit", "accuracy", "loss", "sensitivity", "specificity"), rank_values):
        if not (isinstance(r, (int, float, np.integer, np.floating)) and 1 <= r <= n):
            raise ValidationError(f"{name} rank {r!r} outside [1, {n}]")
    k = n + 1 if shift is None else shift
    terms = [
        w * (r if raw else k - r) for w, r, raw in zip(weights, rank_values, _RAW_RANK)
    ]
    return ScoreBreakdown(*terms, total=sum(terms), weights=weights, stage_size=int(n))


def _rank_columns(matrix, tie_policy) -> list:
    return [metric_ranks(list(matrix[:, j]), tie_policy) for j in range(matrix.shape[1])]


def _order_by_score(totals, param_counts, names) -> list:
    """Indices sorted best first; equal totals broken by fewer parameters."""
    order = sorted(range(len(totals)), key=lambda i: -totals[i])
    for a, b in zip(order, order[1:]):
        if totals[a] != totals[b]:
            continue
        pa, pb = param_counts[a], param_counts[b]
        if pa is None or pb is None:
            raise ValidationError(
                f"score tie between {names[a]!r} and {names[b]!r} "
                f"(total {totals[a]:g}) cannot be broken: parameter count missing"
            )
        if pa == pb:
            raise ValidationError(
                f"score tie between {names[a]!r} and {names[b]!r} "
                f"(total {totals[a]:g}) cannot be broken: equal parameter counts"
            )
    return sorted(
        range(len(totals)),
        key=lambda i: (-totals[i], param_counts[i] if param_counts[i] is not None else 0),
    )


def rank_stage(
    records: Sequence[RunRecord],
    tie_policy=TiePolicy.ORDINAL,
    weights=DEFAULT_WEIGHTS,
    shift: Optional[float] = None,
) -> StageResult:
    """Rank every record on every metric, score them and order the stage."""
    records = list(records)
    if not records:
        raise ValidationError("no records")
    policy = TiePolicy.parse(tie_policy)
    weights = _check_weights(weights)
    names = [r.model_name for r in records]
    seen = set()
    for name in names:
        if name in seen:
            raise ValidationError(f"duplicate model name {name!r}")
        seen.add(name)

    n = len(records)
    matrix = np.array([r.metrics.as_tuple() for r in records], dtype=float)
    columns = _rank_columns(matrix, policy)
    rank_vectors = [RankVector(*(col[i] for col in columns)) for i in range(n)]
    scores = [overall_score(rv, n, weights, shift) for rv in rank_vectors]
    order = _order_by_score([s.total for s in scores], [r.param_count for r in records], names)

    entries = tuple(
        LeaderboardEntry(records[i], rank_vectors[i], scores[i], final_rank=pos + 1)
        for pos, i in enumerate(order)
    )
    return StageResult(entries=entries, tie_policy=policy, weights=weights, input_order=tuple(names))


class OverallScoreRanker(BaseEstimator):
    """Estimator wrapper around :func:`rank_stage`.

    ``X`` has one row per candidate model and the five metric columns in
    the order ``overfitting, val_accuracy, val_loss, sensitivity,
    specificity``. Ranking is relative to the stage, so there is no
    ``predict`` on unseen rows; use ``fit_predict``.

    Parameters
    ----------
    weights : tuple of 5 floats, default=(3, 2, 1.5, 1, 0.25)
    tie_policy : {"ordinal", "average", "competition"}, default="ordinal"
    shift : float or None, default=None
        Constant used in place of ``N + 1``.

    Attributes
    ----------
    metric_ranks_ : ndarray of shape (n_models, 5)
    scores_ : ndarray of shape (n_models,)
    final_ranks_ : ndarray of shape (n_models,)
    result_ : StageResult
    """

    def __init__(self, weights=DEFAULT_WEIGHTS, tie_policy="ordinal", shift=None):
        self.weights = weights
        self.tie_policy = tie_policy
        self.shift = shift

    def fit(self, X, y=None, param_counts=None, model_names=None):
        X = check_array(X, dtype=float, ensure_all_finite=True)
        if X.shape[1] != len(METRIC_NAMES):
            raise ValidationError(f"X must have {len(METRIC_NAMES)} columns, got {X.shape[1]}")
        n = X.shape[0]
        if model_names is None:
            model_names = [f"model_{i}" for i in range(n)]
        if param_counts is None:
            param_counts = [None] * n
        if len(model_names) != n or len(param_counts) != n:
            raise ValidationError("model_names and param_counts must have one entry per row of X")
        records = [
            RunRecord(str(name), MetricSet(*row), None if pc is None else int(pc))
            for name, row, pc in zip(model_names, X.tolist(), param_counts)
        ]
        result = rank_stage(records, self.tie_policy, self.weights, self.shift)
        rows = result.rows_in_input_order()
        self.result_ = result
        self.metric_ranks_ = np.array([e.ranks.as_tuple() for e in rows], dtype=float)
        self.scores_ = np.array([e.score.total for e in rows])
        self.final_ranks_ = np.array([e.final_rank for e in rows], dtype=int)
        self.n_features_in_ = X.shape[1]
        return self

    def fit_predict(self, X, y=None, **fit_params):
        return self.fit(X, y, **fit_params).final_ranks_

    @property
    def winner_(self) -> str:
        check_is_fitted(self, "result_")
        return self.result_.winner
