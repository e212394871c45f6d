"""Two-stage model selection and test-set generalization check.

Training happens elsewhere; a stage consumes the resulting
:class:`~fundus_select.ranking.RunRecord` rows.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

from .metrics import abs_deltas
from .ranking import DEFAULT_WEIGHTS, StageResult, TiePolicy, rank_stage
from .validation import ValidationError, check_fraction

__all__ = [
    "DEFAULT_TOLERANCE",
    "STAGE1_CANDIDATES",
    "STAGE2_CANDIDATES",
    "TrainingDefaults",
    "StageConfig",
    "VerificationReport",
    "stage1_config",
    "stage2_config",
    "run_stage",
    "verify_generalization",
    "select_model",
]

DEFAULT_TOLERANCE = 0.05

STAGE1_CANDIDATES = (
    "Xception",
    "Resnet50",
    "Resnet50V2",
    "Resnet101",
    "Resnet101V2",
    "Resnet152",
    "Resnet152V2",
    "VGG16",
    "VGG19",
    "InceptionV3",
    "InceptionResNetV2",
    "MobileNet",
    "DenseNet121",
    "DenseNet169",
    "DenseNet201",
    "NASNetLarge",
    "NASNetMobile",
)

OPTIMIZERS = ("RMS", "Adam", "Adagrad")
LOSSES = ("CCE", "MSE", "MAE")
STAGE2_CANDIDATES = tuple(f"{opt}, {loss}" for opt in OPTIMIZERS for loss in LOSSES)

_METRIC_LABELS = ("accuracy", "sensitivity", "specificity")


@dataclass(frozen=True)
class TrainingDefaults:
    """Settings the fixture metrics were produced under. Descriptive only."""

    input_dims: tuple = (128, 128, 3)
    batch_size: int = 32
    epochs: int = 15
    dropout: float = 0.5
    head: str = "flatten -> dropout -> dense(2, softmax)"
    batch_norm_unfrozen: bool = True
    optimizer: str = "rmsprop"
    loss: str = "categorical cross-entropy"


@dataclass(frozen=True)
class StageConfig:
    stage_id: str
    candidates: tuple
    defaults: TrainingDefaults = field(default_factory=TrainingDefaults)
    base_architecture: Optional[str] = None

    def __post_init__(self):
        if self.stage_id not in ("stage1", "stage2"):
            raise ValidationError(f"stage_id must be 'stage1' or 'stage2', got {self.stage_id!r}")
        object.__setattr__(self, "candidates", tuple(self.candidates))
        if not self.candidates:
            raise ValidationError(f"{self.stage_id}: no candidates")
        if len(set(self.candidates)) != len(self.candidates):
            raise ValidationError(f"{self.stage_id}: duplicate candidate names")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["candidates"] = list(self.candidates)
        d["defaults"]["input_dims"] = list(self.defaults.input_dims)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "StageConfig":
        try:
            defaults = dict(data.get("defaults") or {})
            if "input_dims" in defaults:
                defaults["input_dims"] = tuple(defaults["input_dims"])
            return cls(
                stage_id=data["stage_id"],
                candidates=tuple(data["candidates"]),
                defaults=TrainingDefaults(**defaults),
                base_architecture=data.get("base_architecture"),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"invalid stage config: {exc}") from None

    @classmethod
    def load(cls, path) -> "StageConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def stage1_config() -> StageConfig:
    return StageConfig("stage1", STAGE1_CANDIDATES)


def stage2_config(base_architecture: str = "Xception") -> StageConfig:
    return StageConfig("stage2", STAGE2_CANDIDATES, base_architecture=base_architecture)


@dataclass(frozen=True)
class VerificationReport:
    val: tuple
    test: tuple
    deltas: tuple
    tolerance: float
    passed: bool

    def rows(self) -> list:
        return list(zip(_METRIC_LABELS, self.val, self.test, self.deltas))


def run_stage(
    config: StageConfig,
    records: Sequence,
    tie_policy=TiePolicy.ORDINAL,
    weights=DEFAULT_WEIGHTS,
) -> StageResult:
    """Rank one stage after checking the records against its candidate roster."""
    records = list(records)
    names = [r.model_name for r in records]
    unknown = [n for n in names if n not in config.candidates]
    if unknown:
        raise ValidationError(f"{config.stage_id}: unknown model names {unknown}")
    missing = [c for c in config.candidates if c not in names]
    if missing:
        raise ValidationError(f"{config.stage_id}: no run records for candidates {missing}")
    result = rank_stage(records, tie_policy, weights)
    return replace(result, stage_id=config.stage_id, config=config.to_dict())


def verify_generalization(val, test, tolerance: float = DEFAULT_TOLERANCE) -> VerificationReport:
    """Compare validation and test (accuracy, sensitivity, specificity).

    Passes iff every absolute difference is at most ``tolerance``.
    """
    tolerance = check_fraction(tolerance, "tolerance")
    if tolerance <= 0:
        raise ValidationError("tolerance must be positive")
    deltas = abs_deltas(val, test)
    return VerificationReport(
        val=tuple(float(v) for v in val),
        test=tuple(float(t) for t in test),
        deltas=deltas,
        tolerance=tolerance,
        passed=all(d <= tolerance for d in deltas),
    )


def select_model(stage1_records, stage2_records, tie_policy=TiePolicy.ORDINAL, weights=DEFAULT_WEIGHTS):
    """Run both stages; returns ``(stage1_result, stage2_result)``.

    Stage 2 candidates are the optimizer/loss grid on top of the stage 1
    winner.
    """
    first = run_stage(stage1_config(), stage1_records, tie_policy, weights)
    second = run_stage(stage2_config(first.winner), stage2_records, tie_policy, weights)
    return first, second
