"""Entity-scoped sliding-window extraction and chronological splitting.

Windows are anchored at an entity's first observation and advance by the
stride. Each window splits time into a context segment [t_start, t_cut]
and a query horizon (t_cut, t_end]; query timestamps are the true future
observation times, so no imputation of targets ever happens. Windows
never cross entity boundaries.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import InputError, SplitError
from .series import (
    ForecastWindow,
    IrregularSeries,
    SplitAssignment,
    TextStream,
    VariableTrack,
    WindowSpec,
    merge_splits,
)

SPLIT_RATIOS = (0.6, 0.2, 0.2)


def extract_windows(
    series: IrregularSeries, text: TextStream, spec: WindowSpec
) -> list[ForecastWindow]:
    """Slide a (context, horizon) window over one entity.

    Returns windows ordered by t_start. A window is kept only if its
    context lies inside the observed span and it has at least one past
    observation and one query; trailing positions whose context would
    run past the last observation are dropped.
    """
    if series.entity_id != text.entity_id:
        raise InputError(
            f"series entity {series.entity_id!r} != text entity {text.entity_id!r}"
        )
    first, last = series.time_span()
    windows: list[ForecastWindow] = []
    index = 0
    while True:
        t_start = first + index * spec.stride
        t_cut = t_start + spec.context_duration
        if t_cut > last:
            break
        t_end = t_cut + spec.horizon_duration
        window = _build_window(series, text, t_start, t_cut, t_end)
        if window is not None:
            windows.append(window)
        index += 1
    return windows


def _build_window(series, text, t_start, t_cut, t_end):
    past = series.restricted(t_start, t_cut)
    if past.n_observations == 0:
        return None
    query_times = []
    query_values = []
    for var in series.variables:
        keep = (var.times > t_cut) & (var.times <= t_end)
        query_times.append(var.times[keep])
        query_values.append(var.values[keep])
    if sum(q.size for q in query_times) == 0:
        return None
    return ForecastWindow(
        entity_id=series.entity_id,
        t_start=t_start,
        t_cut=t_cut,
        t_end=t_end,
        past=past,
        text_past=text.restricted(t_start, t_cut),
        query_times=tuple(query_times),
        query_values=tuple(query_values),
    )


def chronological_split(
    windows: list[ForecastWindow], ratios: tuple[float, float, float] = SPLIT_RATIOS
) -> SplitAssignment:
    """Partition time-ordered windows into train/validation/test.

    Train and validation take floor(n * ratio) windows each; the
    remainder goes to test, so every window is assigned exactly once.
    """
    n = len(windows)
    if n < 3:
        raise SplitError(f"need at least 3 windows to split, got {n}")
    starts = [w.t_start for w in windows]
    if any(b < a for a, b in zip(starts, starts[1:])) :
        raise InputError("windows must be sorted by t_start before splitting")
    n_train = int(np.floor(n * ratios[0]))
    n_val = int(np.floor(n * ratios[1]))
    return SplitAssignment(
        train=tuple(windows[:n_train]),
        validation=tuple(windows[n_train : n_train + n_val]),
        test=tuple(windows[n_train + n_val :]),
    )


def split_dataset(
    per_entity_windows: list[list[ForecastWindow]],
    ratios: tuple[float, float, float] = SPLIT_RATIOS,
) -> SplitAssignment:
    """Split each entity's windows chronologically, then merge."""
    return merge_splits([chronological_split(w, ratios) for w in per_entity_windows])


class WindowScaler(BaseEstimator, TransformerMixin):
    """Per-variable z-score scaling fit on training windows only.

    Statistics pool each variable's past values and targets across the
    windows seen in ``fit``; ``transform`` rescales both. Predictions and
    errors downstream stay in this normalized space (never inverted).
    """

    def __init__(self, min_scale: float = 1e-8):
        self.min_scale = min_scale

    def fit(self, windows, y=None):
        sums: dict[str, float] = {}
        sq_sums: dict[str, float] = {}
        counts: dict[str, int] = {}
        for window in windows:
            for var, targets in zip(window.past.variables, window.query_values):
                pooled = np.concatenate([var.values, targets])
                sums[var.name] = sums.get(var.name, 0.0) + float(pooled.sum())
                sq_sums[var.name] = sq_sums.get(var.name, 0.0) + float((pooled**2).sum())
                counts[var.name] = counts.get(var.name, 0) + pooled.size
        self.offset_ = {}
        self.scale_ = {}
        for name, count in counts.items():
            if count == 0:
                self.offset_[name] = 0.0
                self.scale_[name] = 1.0
                continue
            mean = sums[name] / count
            var = max(sq_sums[name] / count - mean**2, 0.0)
            self.offset_[name] = mean
            self.scale_[name] = max(np.sqrt(var), self.min_scale)
        return self

    def transform(self, windows):
        if not hasattr(self, "offset_"):
            raise InputError("WindowScaler used before fit")
        return [self._transform_one(w) for w in windows]

    def _transform_one(self, window: ForecastWindow) -> ForecastWindow:
        tracks = []
        values = []
        for var, targets in zip(window.past.variables, window.query_values):
            mean = self.offset_.get(var.name, 0.0)
            scale = self.scale_.get(var.name, 1.0)
            tracks.append(VariableTrack(var.name, var.times, (var.values - mean) / scale))
            values.append((targets - mean) / scale)
        return ForecastWindow(
            entity_id=window.entity_id,
            t_start=window.t_start,
            t_cut=window.t_cut,
            t_end=window.t_end,
            past=IrregularSeries(window.past.entity_id, tuple(tracks)),
            text_past=window.text_past,
            query_times=window.query_times,
            query_values=tuple(values),
        )
