"""Canonical pre-alignment of forecast windows.

An irregular window becomes a fixed-length grid: the union of its past
observation timestamps, chronologically sorted, with one row appended per
distinct query timestamp and zero-padding rows after that up to a global
resolution L. Values are zero-filled where unobserved and a binary mask
records which cells hold real observations. Timestamps are min-max
normalized over the window span, so padding rows (timestamp 0) must be
gated on mask/query flags downstream, never on the timestamp itself.

No interpolation happens here by design; the mask is the ground truth for
observability and the round trip back to the raw observations is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import AmbiguityError, CapacityError, InputError
from .series import ForecastWindow


@dataclass(frozen=True)
class AlignedWindow:
    """Fixed-length aligned grid for one forecast window.

    grid_timestamps: (L,) normalized to [0, 1], 0 on padding rows
    values:          (L, N) observed values, 0 where unobserved
    mask:            (L, N) 1 iff the cell holds an observation
    query_flags:     (L,) 1 on appended query rows
    """

    grid_timestamps: np.ndarray
    values: np.ndarray
    mask: np.ndarray
    query_flags: np.ndarray
    t_start: float
    t_end: float
    variable_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        for arr in (self.grid_timestamps, self.values, self.mask, self.query_flags):
            arr.setflags(write=False)

    @property
    def resolution(self) -> int:
        return self.grid_timestamps.shape[0]

    @property
    def n_variables(self) -> int:
        return self.values.shape[1]

    @property
    def feature_width(self) -> int:
        return 2 * self.n_variables + 1

    @property
    def n_real_rows(self) -> int:
        """Rows that are either observed-past or query rows, not padding."""
        padding = (self.mask.sum(axis=1) == 0) & (self.query_flags == 0)
        # padding is a contiguous tail; real rows are everything before it
        return int(self.resolution - padding[::-1].cumprod().sum())

    def denormalized_timestamps(self) -> np.ndarray:
        return self.t_start + self.grid_timestamps * (self.t_end - self.t_start)


def compute_global_resolution(all_windows: list[ForecastWindow]) -> int:
    """L = max over windows of distinct past + distinct query timestamps."""
    if not all_windows:
        raise InputError("cannot compute a global resolution from zero windows")
    return max(
        len(w.distinct_past_times()) + len(w.distinct_query_times())
        for w in all_windows
    )


def align(window: ForecastWindow, resolution: int) -> AlignedWindow:
    """Place one window onto the length-`resolution` canonical grid."""
    past_times = window.distinct_past_times()
    query_times = window.distinct_query_times()
    needed = len(past_times) + len(query_times)
    if resolution < needed:
        raise CapacityError(
            f"window needs {needed} rows (past {len(past_times)} + query "
            f"{len(query_times)}) but resolution is {resolution}"
        )

    n = window.n_variables
    values = np.zeros((resolution, n))
    mask = np.zeros((resolution, n))
    query_flags = np.zeros(resolution)
    grid = np.zeros(resolution)

    row_of = {float(t): i for i, t in enumerate(past_times)}
    for col, var in enumerate(window.past.variables):
        for t, v in zip(var.times, var.values):
            row = row_of[float(t)]
            if mask[row, col]:
                raise AmbiguityError(
                    f"duplicate observation for variable {var.name!r} at t={t}"
                )
            values[row, col] = v
            mask[row, col] = 1.0

    raw = np.concatenate([past_times, query_times])
    span = window.t_end - window.t_start
    grid[: len(raw)] = (raw - window.t_start) / span
    query_flags[len(past_times) : len(raw)] = 1.0

    return AlignedWindow(
        grid_timestamps=grid,
        values=values,
        mask=mask,
        query_flags=query_flags,
        t_start=window.t_start,
        t_end=window.t_end,
        variable_names=window.past.variable_names,
    )


def feature_expand(aligned: AlignedWindow) -> np.ndarray:
    """Stack channels into an L x (2N+1) matrix: values, masks, timestamp."""
    return np.hstack(
        [aligned.values, aligned.mask, aligned.grid_timestamps[:, None]]
    )


class CanonicalAligner(BaseEstimator, TransformerMixin):
    """Transformer from forecast windows to aligned grids.

    fit scans the windows once to fix the global resolution; transform
    aligns any window that fits under it. Pass `resolution` to pin L
    explicitly (e.g. when aligning a test split against a training-time
    grid).
    """

    def __init__(self, resolution=None):
        self.resolution = resolution

    def fit(self, windows: list[ForecastWindow], y=None):
        if self.resolution is not None:
            if self.resolution < 1:
                raise InputError(f"resolution must be >= 1, got {self.resolution}")
            self.resolution_ = int(self.resolution)
        else:
            self.resolution_ = compute_global_resolution(windows)
        return self

    def transform(self, windows: list[ForecastWindow]) -> list[AlignedWindow]:
        if not hasattr(self, "resolution_"):
            raise InputError("aligner is not fitted; call fit first")
        return [align(w, self.resolution_) for w in windows]

    def expand(self, windows: list[ForecastWindow]) -> np.ndarray:
        """Transform then feature-expand into one (W, L, 2N+1) tensor."""
        aligned = self.transform(windows)
        if not aligned:
            raise InputError("no windows to expand")
        return np.stack([feature_expand(a) for a in aligned])
