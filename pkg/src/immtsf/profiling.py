"""Irregularity profiling metrics.

Three dataset-level statistics characterize how irregular a collection of
series is:

* feature observability entropy: normalized Shannon entropy of the
  per-feature observation-count distribution (1 = evenly observed
  features, 0 = one feature dominates);
* temporal observability entropy: normalized Shannon entropy of event
  counts over K equal-width time bins (1 = even coverage, 0 = bursts);
* mean inter-observation interval: average gap between successive
  observations, in a configurable unit.

Entropies use the natural log with a 1e-12 stabilizer inside the log and
are normalized by log(N) or log(K), so they land in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import MetricError
from .series import IrregularSeries, TextStream

EPSILON = 1e-12
DEFAULT_BINS = 10

TIME_UNITS = {
    "seconds": 1.0,
    "minutes": 60.0,
    "hours": 3600.0,
    "days": 86400.0,
    "weeks": 604800.0,
}


@dataclass(frozen=True)
class IrregularityProfile:
    """Profile row for one dataset; NaN marks a metric that was undefined."""

    name: str
    n_entities: int
    n_features: int
    n_unique_timestamps: int
    n_observations: int
    feature_entropy: float
    temporal_entropy: float
    mean_ioi: float
    ioi_unit: str
    n_text_entries: int
    text_temporal_entropy: float
    bins: int = DEFAULT_BINS
    warnings: tuple[str, ...] = ()


def _normalized_entropy(proportions: np.ndarray, normalizer: float) -> float:
    entropy = -float(np.sum(proportions * np.log(proportions + EPSILON))) / normalizer
    # The +EPSILON inside the log can push a degenerate distribution a few
    # 1e-12 below zero; the metric is defined on [0, 1].
    return max(entropy, 0.0)


def feature_entropy(counts) -> float:
    """Normalized entropy of per-feature observation counts."""
    counts = np.asarray(counts, dtype=np.float64)
    n = counts.size
    if n < 2:
        raise MetricError(f"feature entropy normalizer log(N) undefined for N={n}")
    if np.any(counts < 0):
        raise MetricError("feature counts must be nonnegative")
    total = counts.sum()
    if total == 0:
        raise MetricError("feature entropy undefined: all counts are zero")
    return _normalized_entropy(counts / total, math.log(n))


def temporal_entropy(timestamps, bins: int = DEFAULT_BINS) -> float:
    """Normalized entropy of observation counts over equal-width time bins.

    Bins partition [min t, max t]; all bins are half-open on the right
    except the last, which includes the maximum, so every timestamp is
    counted exactly once.
    """
    if bins < 2:
        raise MetricError(f"need at least 2 bins, got {bins}")
    timestamps = np.asarray(timestamps, dtype=np.float64)
    if timestamps.size < 2:
        raise MetricError(f"need at least 2 timestamps, got {timestamps.size}")
    lo, hi = timestamps.min(), timestamps.max()
    if lo == hi:
        raise MetricError("temporal entropy undefined: zero time range")
    counts, _ = np.histogram(timestamps, bins=bins, range=(lo, hi))
    return _normalized_entropy(counts / counts.sum(), math.log(bins))


def mean_ioi(timestamps, unit_seconds: float) -> float:
    """Mean gap between successive sorted timestamps, in the given unit."""
    timestamps = np.sort(np.asarray(timestamps, dtype=np.float64))
    if timestamps.size < 2:
        raise MetricError(f"need at least 2 timestamps for intervals, got {timestamps.size}")
    if unit_seconds <= 0:
        raise MetricError(f"unit_seconds must be positive, got {unit_seconds}")
    return float(np.mean(np.diff(timestamps))) / unit_seconds


def pooled_mean_ioi(per_entity_timestamps, unit_seconds: float) -> float:
    """Mean IOI with intervals pooled across entities.

    Intervals are taken within each entity only; the gap between two
    unrelated entities is not a sampling interval.
    """
    total = 0.0
    count = 0
    for times in per_entity_timestamps:
        times = np.sort(np.asarray(times, dtype=np.float64))
        if times.size >= 2:
            diffs = np.diff(times)
            total += float(diffs.sum())
            count += diffs.size
    if count == 0:
        raise MetricError("no within-entity intervals available")
    return total / count / unit_seconds


def profile_dataset(
    dataset: list[tuple[IrregularSeries, TextStream]],
    unit: str = "days",
    bins: int = DEFAULT_BINS,
    name: str = "dataset",
) -> IrregularityProfile:
    """Profile a dataset of (series, text) pairs into one metrics row.

    Per-metric failures do not abort the profile: the affected cell is
    NaN and a warning describes the cause.
    """
    if not dataset:
        raise MetricError("cannot profile an empty dataset")
    if unit not in TIME_UNITS:
        raise MetricError(f"unknown time unit {unit!r}; expected one of {sorted(TIME_UNITS)}")
    unit_seconds = TIME_UNITS[unit]
    warnings: list[str] = []

    feature_counts: dict[str, int] = {}
    entity_times = []
    text_times = []
    n_text = 0
    for series, text in dataset:
        for var in series.variables:
            feature_counts[var.name] = feature_counts.get(var.name, 0) + len(var)
        entity_times.append(
            np.sort(np.concatenate([v.times for v in series.variables]))
            if series.n_observations
            else np.empty(0)
        )
        n_text += len(text)
        if len(text):
            text_times.append(text.times)

    all_times = (
        np.concatenate(entity_times) if any(t.size for t in entity_times) else np.empty(0)
    )

    def guarded(label, fn):
        try:
            return fn()
        except MetricError as exc:
            warnings.append(f"{label}: {exc}")
            return float("nan")

    feat = guarded("feature_entropy", lambda: feature_entropy(list(feature_counts.values())))
    temp = guarded("temporal_entropy", lambda: temporal_entropy(all_times, bins))
    ioi = guarded("mean_ioi", lambda: pooled_mean_ioi(entity_times, unit_seconds))
    text_temp = guarded(
        "text_temporal_entropy",
        lambda: temporal_entropy(
            np.concatenate(text_times) if text_times else np.empty(0), bins
        ),
    )

    return IrregularityProfile(
        name=name,
        n_entities=len(dataset),
        n_features=len(feature_counts),
        n_unique_timestamps=int(np.unique(all_times).size),
        n_observations=int(all_times.size),
        feature_entropy=feat,
        temporal_entropy=temp,
        mean_ioi=ioi,
        ioi_unit=unit,
        n_text_entries=n_text,
        text_temporal_entropy=text_temp,
        bins=bins,
        warnings=tuple(warnings),
    )


PROFILE_COLUMNS = (
    "dataset",
    "n_entities",
    "n_features",
    "n_unique_timestamps",
    "n_observations",
    "feature_entropy",
    "temporal_entropy",
    "mean_ioi",
    "ioi_unit",
    "n_text_entries",
    "text_temporal_entropy",
)


def profile_row(profile: IrregularityProfile) -> tuple:
    return (
        profile.name,
        profile.n_entities,
        profile.n_features,
        profile.n_unique_timestamps,
        profile.n_observations,
        profile.feature_entropy,
        profile.temporal_entropy,
        profile.mean_ioi,
        profile.ioi_unit,
        profile.n_text_entries,
        profile.text_temporal_entropy,
    )


def format_profile_table(profiles: list[IrregularityProfile]) -> str:
    """Fixed-width UTF-8 table over PROFILE_COLUMNS."""
    rows = [PROFILE_COLUMNS] + [
        tuple(
            f"{v:.4f}" if isinstance(v, float) else str(v) for v in profile_row(p)
        )
        for p in profiles
    ]
    widths = [max(len(r[i]) for r in rows) for i in range(len(PROFILE_COLUMNS))]
    lines = []
    for i, row in enumerate(rows):
        lines.append(
            "  ".join(cell.rjust(widths[j]) for j, cell in enumerate(row))
        )
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)
