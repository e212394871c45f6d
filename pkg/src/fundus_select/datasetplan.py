"""Class balancing arithmetic and deterministic train/val/test allocation."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from .metrics import Label
from .validation import ValidationError, check_positive_int

__all__ = [
    "GENERATOR_NAME",
    "SPLITS",
    "ClassSource",
    "AugmentationPlan",
    "SplitSpec",
    "ManifestEntry",
    "DatasetManifest",
    "replication_factor",
    "augmented_count",
    "class_totals",
    "allocate_split",
    "build_manifest",
    "reference_sources",
]

# Largest integer exactly representable as a double; keeps counts portable.
MAX_SAFE_COUNT = 2**53 - 1

GENERATOR_NAME = "python-random-mt19937/fisher-yates-descending"
SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class ClassSource:
    source_name: str
    label: Label
    image_count: int

    def __post_init__(self):
        if not isinstance(self.source_name, str) or not self.source_name:
            raise ValidationError("source_name must be a non-empty string")
        object.__setattr__(self, "label", Label.parse(self.label))
        check_positive_int(self.image_count, f"{self.source_name}: image_count")


@dataclass(frozen=True)
class AugmentationPlan:
    """``b`` orientation/zoom variants, each kept plain plus ``c`` noisy copies.

    A plain copy plan (k identical copies, no pixel change) is ``b=k, c=0``.
    """

    b: int = 1
    c: int = 0

    def __post_init__(self):
        check_positive_int(self.b, "b")
        check_positive_int(self.c, "c", minimum=0)


@dataclass(frozen=True)
class SplitSpec:
    train: float = 0.6
    val: float = 0.2
    test: float = 0.2

    def __post_init__(self):
        for name in SPLITS:
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0:
                raise ValidationError(f"split fraction {name}={v!r} must be a non-negative number")
        if abs(self.train + self.val + self.test - 1.0) > 1e-9:
            raise ValidationError(
                f"split fractions sum to {self.train + self.val + self.test!r}, expected 1"
            )

    @classmethod
    def parse(cls, text: str) -> "SplitSpec":
        """Parse ``"0.6,0.2,0.2"``."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3:
            raise ValidationError(f"expected three comma-separated fractions, got {text!r}")
        try:
            values = [float(p) for p in parts]
        except ValueError:
            raise ValidationError(f"invalid fractions {text!r}") from None
        return cls(*values)

    def as_tuple(self) -> tuple:
        return (self.train, self.val, self.test)


@dataclass(frozen=True)
class ManifestEntry:
    ref: str
    label: Label
    source: str
    split: str


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple
    seed: int
    spec: SplitSpec
    generator: str = GENERATOR_NAME

    def split_counts(self) -> tuple:
        counts = {s: 0 for s in SPLITS}
        for e in self.entries:
            counts[e.split] += 1
        return tuple(counts[s] for s in SPLITS)


def replication_factor(plan: AugmentationPlan) -> int:
    return plan.b * (plan.c + 1)


def augmented_count(source: ClassSource, plan: AugmentationPlan) -> int:
    count = source.image_count * replication_factor(plan)
    if count > MAX_SAFE_COUNT:
        raise ValidationError(f"{source.source_name}: augmented count {count} exceeds {MAX_SAFE_COUNT}")
    return count


def class_totals(sources_with_plans: Iterable) -> tuple:
    """Return ``(healthy_total, diseased_total, grand_total)``."""
    pairs = list(sources_with_plans)
    if not pairs:
        raise ValidationError("at least one source is required")
    totals = {Label.HEALTHY: 0, Label.DISEASED: 0}
    for source, plan in pairs:
        totals[source.label] += augmented_count(source, plan)
    grand = totals[Label.HEALTHY] + totals[Label.DISEASED]
    if grand > MAX_SAFE_COUNT:
        raise ValidationError(f"grand total {grand} exceeds {MAX_SAFE_COUNT}")
    return totals[Label.HEALTHY], totals[Label.DISEASED], grand


def allocate_split(total: int, spec: SplitSpec = SplitSpec()) -> tuple:
    """Floor the train and val shares; test takes the remainder."""
    check_positive_int(total, "total")
    # The epsilon absorbs products like 100 * 0.29 == 28.999999999999996.
    train = math.floor(total * spec.train + 1e-9)
    val = math.floor(total * spec.val + 1e-9)
    test = total - train - val
    if min(train, val, test) < 0:
        raise ValidationError(f"split of {total} with {spec.as_tuple()} gives a negative count")
    return train, val, test


def _expand(source: ClassSource, plan: AugmentationPlan) -> list:
    factor = replication_factor(plan)
    width = len(str(source.image_count - 1))
    return [
        (f"{source.source_name}/{i:0{width}d}/v{v}", source.label, source.source_name)
        for i in range(source.image_count)
        for v in range(factor)
    ]


def build_manifest(
    sources_with_plans: Sequence, spec: SplitSpec = SplitSpec(), seed: int = 0
) -> DatasetManifest:
    """Expand, shuffle globally with a seeded generator, and cut into splits.

    The shuffle is ``random.Random(seed).shuffle`` (Mersenne Twister with a
    descending Fisher-Yates pass), so a seed pins the manifest exactly.
    """
    pairs = list(sources_with_plans)
    _, _, grand = class_totals(pairs)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ValidationError(f"seed={seed!r} must be an integer")
    items = [item for source, plan in pairs for item in _expand(source, plan)]
    random.Random(seed).shuffle(items)
    n_train, n_val, _ = allocate_split(grand, spec)
    entries = []
    for pos, (ref, label, source_name) in enumerate(items):
        if pos < n_train:
            split = "train"
        elif pos < n_train + n_val:
            split = "val"
        else:
            split = "test"
        entries.append(ManifestEntry(ref, label, source_name, split))
    return DatasetManifest(entries=tuple(entries), seed=seed, spec=spec)


def reference_sources() -> list:
    """The four source/plan pairs of the published glaucoma/retinopathy dataset."""
    return [
        (ClassSource("ORIGA-healthy", Label.HEALTHY, 482), AugmentationPlan(b=3, c=1)),
        (ClassSource("EYEPACS-healthy", Label.HEALTHY, 3000), AugmentationPlan(b=1, c=0)),
        (ClassSource("ORIGA-glaucoma", Label.DISEASED, 168), AugmentationPlan(b=4, c=3)),
        (ClassSource("EYEPACS-retinopathy", Label.DISEASED, 987), AugmentationPlan(b=3, c=0)),
    ]
