"""Binary evaluation metrics for healthy/diseased classifiers.

The diseased class is the positive class throughout. All values are
immutable dataclasses; every function here is pure.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields
from typing import Iterable, Optional, Sequence

from .validation import ValidationError, check_fraction

__all__ = [
    "Label",
    "PredictionRecord",
    "ConfusionMatrix",
    "MetricSet",
    "ComparisonReport",
    "METRIC_NAMES",
    "CCE_EPSILON",
    "confusion_from_predictions",
    "accuracy",
    "sensitivity",
    "specificity",
    "overfitting",
    "loss_value",
    "abs_deltas",
    "relative_comparison",
]

CCE_EPSILON = 1e-12
PROBABILITY_SUM_TOL = 1e-6

METRIC_NAMES = ("overfitting", "val_accuracy", "val_loss", "sensitivity", "specificity")


class Label(str, enum.Enum):
    HEALTHY = "healthy"
    DISEASED = "diseased"

    @classmethod
    def parse(cls, value) -> "Label":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value))
        except ValueError:
            raise ValidationError(
                f"unknown label {value!r}; expected 'healthy' or 'diseased'"
            ) from None


@dataclass(frozen=True)
class PredictionRecord:
    example_id: str
    true_label: Label
    p_healthy: float
    p_diseased: float

    def __post_init__(self):
        object.__setattr__(self, "true_label", Label.parse(self.true_label))
        for name in ("p_healthy", "p_diseased"):
            p = getattr(self, name)
            if not (isinstance(p, (int, float)) and math.isfinite(p) and 0.0 <= p <= 1.0):
                raise ValidationError(
                    f"example {self.example_id!r}: {name}={p!r} is not a probability"
                )
        if abs(self.p_healthy + self.p_diseased - 1.0) > PROBABILITY_SUM_TOL:
            raise ValidationError(
                f"example {self.example_id!r}: probabilities sum to "
                f"{self.p_healthy + self.p_diseased!r}, expected 1"
            )

    def probability_of(self, label: Label) -> float:
        return self.p_diseased if label is Label.DISEASED else self.p_healthy


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fn_: int
    tn: int
    fp: int

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 0:
                raise ValidationError(f"confusion count {f.name}={v!r} must be a non-negative integer")

    @property
    def positives(self) -> int:
        return self.tp + self.fn_

    @property
    def negatives(self) -> int:
        return self.tn + self.fp

    @property
    def total(self) -> int:
        return self.positives + self.negatives


@dataclass(frozen=True)
class MetricSet:
    """The five quantities the ranking heuristic consumes for one model."""

    overfitting: float
    val_accuracy: float
    val_loss: float
    sensitivity: float
    specificity: float

    def __post_init__(self):
        for name in METRIC_NAMES:
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValidationError(f"{name}={v!r} is not a finite number")
            object.__setattr__(self, name, float(v))
        if not -1.0 <= self.overfitting <= 1.0:
            raise ValidationError(f"overfitting={self.overfitting!r} outside [-1, 1]")
        for name in ("val_accuracy", "sensitivity", "specificity"):
            check_fraction(getattr(self, name), name)
        if self.val_loss < 0:
            raise ValidationError(f"val_loss={self.val_loss!r} is negative")

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, name) for name in METRIC_NAMES)

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in METRIC_NAMES}


@dataclass(frozen=True)
class ComparisonReport:
    """Final-vs-baseline comparison.

    ``relative_change`` and ``loss_ratio`` hold ``None`` where the
    baseline denominator is zero.
    """

    abs_delta: dict
    relative_change: dict
    loss_ratio: Optional[float]


def confusion_from_predictions(
    records: Sequence[PredictionRecord], threshold: float = 0.5
) -> ConfusionMatrix:
    """Count outcomes; a record is called diseased iff ``p_diseased >= threshold``."""
    records = list(records)
    if not records:
        raise ValidationError("no records")
    check_fraction(threshold, "threshold")
    tp = fn_ = tn = fp = 0
    for rec in records:
        if not isinstance(rec, PredictionRecord):
            raise ValidationError(f"expected PredictionRecord, got {type(rec).__name__}")
        called_diseased = rec.p_diseased >= threshold
        if rec.true_label is Label.DISEASED:
            if called_diseased:
                tp += 1
            else:
                fn_ += 1
        elif called_diseased:
            fp += 1
        else:
            tn += 1
    return ConfusionMatrix(tp=tp, fn_=fn_, tn=tn, fp=fp)


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise ValidationError("accuracy undefined: confusion matrix is empty")
    return (cm.tp + cm.tn) / cm.total


def sensitivity(cm: ConfusionMatrix) -> float:
    if cm.positives == 0:
        raise ValidationError("undefined sensitivity: no diseased records")
    return cm.tp / cm.positives


def specificity(cm: ConfusionMatrix) -> float:
    if cm.negatives == 0:
        raise ValidationError("undefined specificity: no healthy records")
    return cm.tn / cm.negatives


def overfitting(train_accuracy: float, val_accuracy: float) -> float:
    """Train accuracy minus validation accuracy. Negative values are kept."""
    check_fraction(train_accuracy, "train_accuracy")
    check_fraction(val_accuracy, "val_accuracy")
    return train_accuracy - val_accuracy


def loss_value(records: Sequence[PredictionRecord], kind: str = "CCE") -> float:
    """Mean loss over a prediction log.

    CCE is ``-log p(true class)`` with the probability clamped to
    ``[CCE_EPSILON, 1]``. MSE and MAE average over both class components
    of every record against the one-hot truth.
    """
    records = list(records)
    if not records:
        raise ValidationError("no records")
    kind = kind.upper()
    if kind not in ("CCE", "MSE", "MAE"):
        raise ValidationError(f"unknown loss kind {kind!r}; expected CCE, MSE or MAE")
    total = 0.0
    for rec in records:
        if kind == "CCE":
            p = min(max(rec.probability_of(rec.true_label), CCE_EPSILON), 1.0)
            total += -math.log(p)
            continue
        y_d = 1.0 if rec.true_label is Label.DISEASED else 0.0
        errs = (rec.p_healthy - (1.0 - y_d), rec.p_diseased - y_d)
        if kind == "MSE":
            total += (errs[0] ** 2 + errs[1] ** 2) / 2
        else:
            total += (abs(errs[0]) + abs(errs[1])) / 2
    # -log(1.0) is -0.0
    return abs(total / len(records))


def abs_deltas(val: Iterable[float], test: Iterable[float]) -> tuple:
    """Component-wise ``|val - test|`` of two (accuracy, sensitivity, specificity) triples."""
    val, test = tuple(val), tuple(test)
    if len(val) != 3 or len(test) != 3:
        raise ValidationError("expected (accuracy, sensitivity, specificity) triples")
    for name, triple in (("val", val), ("test", test)):
        for i, v in enumerate(triple):
            check_fraction(v, f"{name}[{i}]")
    return tuple(abs(v - t) for v, t in zip(val, test))


def relative_comparison(final: MetricSet, baseline: MetricSet) -> ComparisonReport:
    abs_delta = {}
    relative = {}
    for name in METRIC_NAMES:
        f, b = getattr(final, name), getattr(baseline, name)
        abs_delta[name] = abs(f - b)
        relative[name] = (f - b) / b if b > 0 else None
    loss_ratio = baseline.val_loss / final.val_loss if final.val_loss > 0 else None
    return ComparisonReport(abs_delta=abs_delta, relative_change=relative, loss_ratio=loss_ratio)
