"""Model selection by weighted per-metric ranks, with the supporting
metric, dataset-planning and image-augmentation tooling."""

__version__ = "0.1.0"

from .augment import (
    ChannelTruncator,
    ImageAugmenter,
    ImageResizer,
    NoiseSpec,
    OrientZoomSpec,
    augment_image,
    orient_zoom,
    perturb_noise,
    prepare_image,
    resize,
    truncate_channels,
)
from .datasetplan import (
    AugmentationPlan,
    ClassSource,
    DatasetManifest,
    SplitSpec,
    allocate_split,
    augmented_count,
    build_manifest,
    class_totals,
    replication_factor,
)
from .metrics import (
    ComparisonReport,
    ConfusionMatrix,
    Label,
    MetricSet,
    PredictionRecord,
    abs_deltas,
    accuracy,
    confusion_from_predictions,
    loss_value,
    overfitting,
    relative_comparison,
    sensitivity,
    specificity,
)
from .protocol import StageConfig, VerificationReport, run_stage, select_model, verify_generalization
from .ranking import (
    DEFAULT_WEIGHTS,
    OverallScoreRanker,
    RankVector,
    RunRecord,
    ScoreBreakdown,
    StageResult,
    TiePolicy,
    metric_ranks,
    overall_score,
    rank_stage,
)
from .validation import ValidationError
