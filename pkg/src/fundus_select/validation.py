"""Input validation helpers shared by every module."""

from __future__ import annotations

import math

import numpy as np

__all__ = ["ValidationError", "check_fraction", "check_positive_int", "check_image"]


class ValidationError(ValueError):
    """Raised when an input violates a documented contract."""


def check_fraction(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float, np.floating, np.integer)):
        raise ValidationError(f"{name}={value!r} is not a number")
    value = float(value)
    if not (math.isfinite(value) and 0.0 <= value <= 1.0):
        raise ValidationError(f"{name}={value!r} outside [0, 1]")
    return value


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ValidationError(f"{name}={value!r} is not an integer")
    if value < minimum:
        raise ValidationError(f"{name}={value!r} must be >= {minimum}")
    return int(value)


def check_image(img, channels=(3, 4), name: str = "image") -> np.ndarray:
    """Return ``img`` as a ``(height, width, channels)`` uint8 array.

    Integer arrays are accepted if every value already lies in [0, 255];
    nothing is silently wrapped or clipped.
    """
    arr = np.asarray(img)
    if arr.ndim != 3:
        raise ValidationError(f"{name} must have shape (height, width, channels), got {arr.shape}")
    h, w, c = arr.shape
    if h < 1 or w < 1:
        raise ValidationError(f"{name} has a zero dimension: {arr.shape}")
    if channels is not None and c not in channels:
        raise ValidationError(f"{name} has {c} channels; expected one of {tuple(channels)}")
    if arr.dtype != np.uint8:
        if not np.issubdtype(arr.dtype, np.integer):
            raise ValidationError(f"{name} dtype {arr.dtype} is not an integer type")
        if arr.size and (arr.min() < 0 or arr.max() > 255):
            raise ValidationError(f"{name} values outside [0, 255]")
        arr = arr.astype(np.uint8)
    return arr
