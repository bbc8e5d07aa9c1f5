"""Input validation helpers used by the estimator-facing API."""

from __future__ import annotations

import numpy as np

from .exceptions import InputError


def as_float_array(value, name: str, ndim: int | None = None) -> np.ndarray:
    """Coerce to a C-contiguous float64 array and reject non-finite entries."""
    arr = np.ascontiguousarray(value, dtype=np.float64)
    if ndim is not None and arr.ndim != ndim:
        raise InputError(f"{name} must be {ndim}-dimensional, got ndim={arr.ndim}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite entries")
    return arr


def check_shape(arr: np.ndarray, shape: tuple[int, ...], name: str) -> None:
    if arr.shape != shape:
        raise InputError(f"{name} has shape {arr.shape}, expected {shape}")


def check_finite_scalar(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value):
        raise InputError(f"{name} must be finite, got {value!r}")
    return value
