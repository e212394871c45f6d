"""Pixel-level image preparation and augmentation.

Images are ``numpy.uint8`` arrays of shape ``(height, width, channels)``
with 3 or 4 channels. Resampling is bilinear with pixel centers at
half-integer coordinates: output pixel ``j`` of an axis of length ``m``
samples source coordinate ``(j + 0.5) * n / m - 0.5`` of an axis of
length ``n``. Interpolated values are rounded half up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .datasetplan import AugmentationPlan, replication_factor
from .validation import ValidationError, check_image, check_positive_int

__all__ = [
    "TARGET_SIZE",
    "MAX_SHIFT",
    "OrientZoomSpec",
    "NoiseSpec",
    "resize",
    "truncate_channels",
    "orient_zoom",
    "perturb_noise",
    "variant_seed",
    "default_orient_specs",
    "augment_image",
    "prepare_image",
    "ImageResizer",
    "ChannelTruncator",
    "ImageAugmenter",
]

TARGET_SIZE = 128
MAX_SHIFT = 2


@dataclass(frozen=True)
class OrientZoomSpec:
    """Rotation (degrees, counter-clockwise as displayed) and zoom about the center."""

    rotation_degrees: float = 0.0
    zoom: float = 1.0
    fill: int = 0

    def __post_init__(self):
        if not math.isfinite(self.rotation_degrees):
            raise ValidationError(f"rotation_degrees={self.rotation_degrees!r} is not finite")
        if not (math.isfinite(self.zoom) and self.zoom > 0):
            raise ValidationError(f"zoom={self.zoom!r} must be positive")
        if isinstance(self.fill, bool) or not isinstance(self.fill, (int, np.integer)) or not 0 <= self.fill <= 255:
            raise ValidationError(f"fill={self.fill!r} must be an integer in [0, 255]")


@dataclass(frozen=True)
class NoiseSpec:
    seed: int = 0
    max_shift: int = MAX_SHIFT

    def __post_init__(self):
        check_positive_int(self.seed, "seed", minimum=0)
        if self.max_shift != MAX_SHIFT:
            raise ValidationError(f"max_shift is fixed at {MAX_SHIFT}")


def _round_clip(values: np.ndarray) -> np.ndarray:
    # Exact halves (e.g. 147 * 3/14 = 31.5) can land one ulp low in floating point.
    return np.clip(np.floor(values + (0.5 + 1e-9)), 0, 255).astype(np.uint8)


def _axis_weights(n_in: int, n_out: int):
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0, n_in - 1)
    lo = np.floor(src).astype(int)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, src - lo


def resize(img, target_w: int = TARGET_SIZE, target_h: int = TARGET_SIZE) -> np.ndarray:
    """Bilinear resize to ``target_h x target_w``; channel count is kept."""
    arr = check_image(img, channels=None)
    target_w = check_positive_int(target_w, "target_w")
    target_h = check_positive_int(target_h, "target_h")
    h, w, _ = arr.shape
    if (h, w) == (target_h, target_w):
        return arr.copy()
    data = arr.astype(np.float64)
    y0, y1, ty = _axis_weights(h, target_h)
    x0, x1, tx = _axis_weights(w, target_w)
    ty = ty[:, None, None]
    rows = data[y0] * (1 - ty) + data[y1] * ty
    tx = tx[None, :, None]
    out = rows[:, x0] * (1 - tx) + rows[:, x1] * tx
    return _round_clip(out)


def truncate_channels(img) -> np.ndarray:
    """Keep the first three channels (drops PNG-style alpha)."""
    arr = check_image(img, channels=(3, 4))
    return arr[:, :, :3].copy()


def _exact_trig(degrees: float):
    quarter = degrees / 90.0
    if quarter == int(quarter):
        return ((1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0))[int(quarter) % 4]
    rad = math.radians(degrees)
    return math.cos(rad), math.sin(rad)


def orient_zoom(img, spec: OrientZoomSpec = OrientZoomSpec()) -> np.ndarray:
    """Rotate and zoom about the geometric center, keeping the frame size.

    Output locations whose source falls outside the input frame
    ``[-0.5, n - 0.5]`` on either axis take ``spec.fill``.
    """
    arr = check_image(img, channels=None)
    if spec.rotation_degrees % 360 == 0 and spec.zoom == 1.0:
        return arr.copy()
    h, w, c = arr.shape
    cos, sin = _exact_trig(spec.rotation_degrees)
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    dx = xs + 0.5 - w / 2
    dy = ys + 0.5 - h / 2
    sx = (dx * cos - dy * sin) / spec.zoom + w / 2 - 0.5
    sy = (dx * sin + dy * cos) / spec.zoom + h / 2 - 0.5

    inside = (sx >= -0.5) & (sx <= w - 0.5) & (sy >= -0.5) & (sy <= h - 0.5)
    sx = np.clip(sx, 0, w - 1)
    sy = np.clip(sy, 0, h - 1)
    x0 = np.floor(sx).astype(int)
    y0 = np.floor(sy).astype(int)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    tx = (sx - x0)[..., None]
    ty = (sy - y0)[..., None]
    data = arr.astype(np.float64)
    top = data[y0, x0] * (1 - tx) + data[y0, x1] * tx
    bottom = data[y1, x0] * (1 - tx) + data[y1, x1] * tx
    out = _round_clip(top * (1 - ty) + bottom * ty)
    out[~inside] = spec.fill
    return out


def perturb_noise(img, spec: NoiseSpec) -> np.ndarray:
    """Shift every channel value by a uniform integer in ``[-2, 2]``, clamped to [0, 255]."""
    arr = check_image(img, channels=(3,))
    rng = np.random.default_rng(spec.seed)
    shifts = rng.integers(-spec.max_shift, spec.max_shift, size=arr.shape, endpoint=True)
    return np.clip(arr.astype(np.int16) + shifts, 0, 255).astype(np.uint8)


def variant_seed(seed: int, index: int) -> int:
    """Seed for variant ``index`` of an image augmented with ``seed``.

    Mixes both through ``numpy.random.SeedSequence(seed, spawn_key=(index,))``
    so variants can be produced independently and in any order.
    """
    check_positive_int(seed, "seed", minimum=0)
    check_positive_int(index, "index", minimum=0)
    state = np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(2, np.uint32)
    return int(state[0]) << 32 | int(state[1])


def default_orient_specs(b: int, fill: int = 0) -> list:
    """``b`` evenly spaced rotations in [-15, 15] degrees paired with zooms in [0.9, 1.1]."""
    b = check_positive_int(b, "b")
    if b == 1:
        return [OrientZoomSpec(0.0, 1.0, fill)]
    rotations = np.linspace(-15.0, 15.0, b)
    zooms = np.linspace(0.9, 1.1, b)
    return [OrientZoomSpec(float(r), float(z), fill) for r, z in zip(rotations, zooms)]


def augment_image(
    img,
    plan: AugmentationPlan,
    orient_specs: Optional[Sequence[OrientZoomSpec]] = None,
    seed: int = 0,
) -> list:
    """Expand one image into its ``b * (c + 1)`` variants.

    Variants come out grouped by orientation: the noise-free oriented image
    first, then its ``c`` noisy copies. The noisy copy ``j`` of orientation
    ``i`` uses ``variant_seed(seed, i * (c + 1) + j + 1)``.
    """
    arr = check_image(img, channels=(3,))
    if orient_specs is None:
        orient_specs = default_orient_specs(plan.b)
    orient_specs = list(orient_specs)
    if len(orient_specs) != plan.b:
        raise ValidationError(f"expected {plan.b} orientation specs, got {len(orient_specs)}")
    out = []
    for i, spec in enumerate(orient_specs):
        oriented = orient_zoom(arr, spec)
        out.append(oriented)
        for j in range(plan.c):
            noise = NoiseSpec(seed=variant_seed(seed, i * (plan.c + 1) + j + 1))
            out.append(perturb_noise(oriented, noise))
    assert len(out) == replication_factor(plan)
    return out


def prepare_image(img, size: int = TARGET_SIZE) -> np.ndarray:
    """Model input preparation: drop alpha, then resize to ``size x size x 3``."""
    return resize(truncate_channels(img), size, size)


class ImageResizer(TransformerMixin, BaseEstimator):
    """Stateless transformer resizing each image in a sequence."""

    def __init__(self, width=TARGET_SIZE, height=TARGET_SIZE):
        self.width = width
        self.height = height

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        return [resize(img, self.width, self.height) for img in X]


class ChannelTruncator(TransformerMixin, BaseEstimator):
    def fit(self, X, y=None):
        return self

    def transform(self, X):
        return [truncate_channels(img) for img in X]


class ImageAugmenter(TransformerMixin, BaseEstimator):
    """Replace each input image by its augmented variants.

    Image ``k`` of ``X`` is augmented with seed ``variant_seed(seed, k)``,
    so the output of a batch does not depend on how it is chunked as long
    as the image indices are kept.
    """

    def __init__(self, b=1, c=0, orient_specs=None, seed=0):
        self.b = b
        self.c = c
        self.orient_specs = orient_specs
        self.seed = seed

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        plan = AugmentationPlan(self.b, self.c)
        out = []
        for k, img in enumerate(X):
            out.extend(augment_image(img, plan, self.orient_specs, variant_seed(self.seed, k)))
        return out
