"""Domain types for irregularly sampled multivariate series and timestamped text.

All timestamps are seconds since the epoch (float). A series holds one
entity's variables; each variable carries its own observation times, so
variables never need to share a grid. Text streams carry pre-computed
embedding vectors at their own, unaligned timestamps.

Every type here is an immutable value: arrays are frozen after validation
and instances are safe to share across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InputError
from .validation import as_float_array, check_finite_scalar


@dataclass(frozen=True)
class Observation:
    """A single (timestamp, value) measurement."""

    timestamp: float
    value: float

    def __post_init__(self):
        check_finite_scalar(self.timestamp, "timestamp")
        check_finite_scalar(self.value, "value")


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class VariableTrack:
    """One variable's observations, strictly increasing in time."""

    name: str
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = _freeze(as_float_array(self.times, f"times[{self.name}]", ndim=1))
        values = _freeze(as_float_array(self.values, f"values[{self.name}]", ndim=1))
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if times.shape != values.shape:
            raise InputError(
                f"variable {self.name!r}: {times.size} timestamps vs {values.size} values"
            )
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise InputError(f"variable {self.name!r}: timestamps not strictly increasing")

    @classmethod
    def from_observations(cls, name: str, observations) -> "VariableTrack":
        obs = sorted(observations, key=lambda o: o.timestamp)
        return cls(
            name,
            np.array([o.timestamp for o in obs], dtype=np.float64),
            np.array([o.value for o in obs], dtype=np.float64),
        )

    @property
    def observations(self) -> tuple[Observation, ...]:
        return tuple(Observation(float(t), float(v)) for t, v in zip(self.times, self.values))

    def __len__(self) -> int:
        return self.times.size


@dataclass(frozen=True)
class IrregularSeries:
    """One entity's multivariate observations with per-variable timestamps."""

    entity_id: str
    variables: tuple[VariableTrack, ...]

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        if len(self.variables) < 1:
            raise InputError(f"series {self.entity_id!r} has no variables")
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise InputError(f"series {self.entity_id!r} has duplicate variable names")

    @property
    def variable_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    @property
    def n_observations(self) -> int:
        return sum(len(v) for v in self.variables)

    def time_span(self) -> tuple[float, float]:
        """(first, last) observation timestamp over all variables."""
        starts = [v.times[0] for v in self.variables if len(v)]
        ends = [v.times[-1] for v in self.variables if len(v)]
        if not starts:
            raise InputError(f"series {self.entity_id!r} has no observations")
        return float(min(starts)), float(max(ends))

    def restricted(self, lo: float, hi: float) -> "IrregularSeries":
        """Sub-series with observations in the closed interval [lo, hi]."""
        tracks = []
        for var in self.variables:
            keep = (var.times >= lo) & (var.times <= hi)
            tracks.append(VariableTrack(var.name, var.times[keep], var.values[keep]))
        return IrregularSeries(self.entity_id, tuple(tracks))


@dataclass(frozen=True)
class TextRecord:
    """One timestamped text embedding."""

    timestamp: float
    embedding: np.ndarray

    def __post_init__(self):
        check_finite_scalar(self.timestamp, "timestamp")
        emb = _freeze(as_float_array(self.embedding, "embedding", ndim=1))
        object.__setattr__(self, "embedding", emb)


@dataclass(frozen=True)
class TextStream:
    """One entity's timestamped text embeddings, nondecreasing in time.

    Stored columnar: ``times`` has shape (L,), ``embeddings`` (L, d). A
    stream may be empty, in which case ``dim`` reports the declared
    embedding width (0 when unknown).
    """

    entity_id: str
    times: np.ndarray = field(default_factory=lambda: np.empty(0))
    embeddings: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))

    def __post_init__(self):
        times = _freeze(as_float_array(self.times, "text times", ndim=1))
        embs = _freeze(as_float_array(self.embeddings, "text embeddings", ndim=2))
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "embeddings", embs)
        if embs.shape[0] != times.size:
            raise InputError(
                f"text stream {self.entity_id!r}: {times.size} timestamps vs "
                f"{embs.shape[0]} embeddings"
            )
        if times.size > 1 and not np.all(np.diff(times) >= 0):
            raise InputError(f"text stream {self.entity_id!r}: timestamps decrease")

    @classmethod
    def from_records(cls, entity_id: str, records) -> "TextStream":
        records = sorted(records, key=lambda r: r.timestamp)
        if not records:
            return cls(entity_id)
        dim = records[0].embedding.size
        for rec in records:
            if rec.embedding.size != dim:
                raise InputError(
                    f"text stream {entity_id!r}: embedding dims differ "
                    f"({rec.embedding.size} vs {dim})"
                )
        times = np.array([r.timestamp for r in records], dtype=np.float64)
        embs = np.stack([r.embedding for r in records])
        return cls(entity_id, times, embs)

    @property
    def records(self) -> tuple[TextRecord, ...]:
        return tuple(
            TextRecord(float(t), self.embeddings[i]) for i, t in enumerate(self.times)
        )

    @property
    def dim(self) -> int:
        return int(self.embeddings.shape[1])

    def __len__(self) -> int:
        return int(self.times.size)

    def restricted(self, lo: float, hi: float) -> "TextStream":
        keep = (self.times >= lo) & (self.times <= hi)
        return TextStream(self.entity_id, self.times[keep], self.embeddings[keep])


@dataclass(frozen=True)
class WindowSpec:
    """Sliding-window geometry: context (past) and horizon (query) durations.

    The stride defaults to the horizon so consecutive query segments do
    not overlap; pass an explicit stride for overlapping contexts.
    """

    context_duration: float
    horizon_duration: float
    stride: float | None = None

    def __post_init__(self):
        if self.stride is None:
            object.__setattr__(self, "stride", float(self.horizon_duration))
        for name in ("context_duration", "horizon_duration", "stride"):
            value = check_finite_scalar(getattr(self, name), name)
            if value <= 0:
                raise InputError(f"{name} must be positive, got {value}")
            object.__setattr__(self, name, value)


@dataclass(frozen=True)
class ForecastWindow:
    """One forecasting example: a past segment, past text, and future queries.

    ``past`` holds observations in [t_start, t_cut]; ``text_past`` text in
    the same interval. ``query_times``/``query_values`` are per-variable
    arrays of the true observation timestamps in (t_cut, t_end] and their
    values, ordered like ``past.variables``. Text timestamps are never
    required to coincide with series timestamps.
    """

    entity_id: str
    t_start: float
    t_cut: float
    t_end: float
    past: IrregularSeries
    text_past: TextStream
    query_times: tuple[np.ndarray, ...]
    query_values: tuple[np.ndarray, ...]

    def __post_init__(self):
        if not (self.t_start <= self.t_cut < self.t_end):
            raise InputError(
                f"window bounds must satisfy t_start <= t_cut < t_end, got "
                f"({self.t_start}, {self.t_cut}, {self.t_end})"
            )
        qt = tuple(
            _freeze(as_float_array(q, "query_times", ndim=1)) for q in self.query_times
        )
        qv = tuple(
            _freeze(as_float_array(v, "query_values", ndim=1)) for v in self.query_values
        )
        object.__setattr__(self, "query_times", qt)
        object.__setattr__(self, "query_values", qv)
        n = self.past.n_variables
        if len(qt) != n or len(qv) != n:
            raise InputError("per-variable query lists must match the variable count")
        for times, values in zip(qt, qv):
            if times.size != values.size:
                raise InputError("each query list needs one target per timestamp")
            if times.size and (times.min() <= self.t_cut or times.max() > self.t_end):
                raise InputError("query timestamps must lie in (t_cut, t_end]")

    @property
    def n_variables(self) -> int:
        return self.past.n_variables

    @property
    def n_past_observations(self) -> int:
        return self.past.n_observations

    @property
    def n_queries(self) -> int:
        return int(sum(q.size for q in self.query_times))

    def distinct_past_times(self) -> np.ndarray:
        if self.n_past_observations == 0:
            return np.empty(0)
        return np.unique(np.concatenate([v.times for v in self.past.variables]))

    def distinct_query_times(self) -> np.ndarray:
        stacked = [q for q in self.query_times if q.size]
        if not stacked:
            return np.empty(0)
        return np.unique(np.concatenate(stacked))

    def normalize_time(self, t) -> np.ndarray:
        """Min-max normalize timestamps over [t_start, t_end] to [0, 1]."""
        span = self.t_end - self.t_start
        return (np.asarray(t, dtype=np.float64) - self.t_start) / span


@dataclass(frozen=True)
class SplitAssignment:
    """Chronological train/validation/test partition of forecast windows."""

    train: tuple[ForecastWindow, ...]
    validation: tuple[ForecastWindow, ...]
    test: tuple[ForecastWindow, ...]

    def __post_init__(self):
        object.__setattr__(self, "train", tuple(self.train))
        object.__setattr__(self, "validation", tuple(self.validation))
        object.__setattr__(self, "test", tuple(self.test))

    def __iter__(self):
        return iter((self.train, self.validation, self.test))

    @property
    def sizes(self) -> tuple[int, int, int]:
        return (len(self.train), len(self.validation), len(self.test))


def merge_splits(parts: list[SplitAssignment]) -> SplitAssignment:
    """Concatenate per-entity splits in entity order."""
    train: list[ForecastWindow] = []
    val: list[ForecastWindow] = []
    test: list[ForecastWindow] = []
    for part in parts:
        train.extend(part.train)
        val.extend(part.validation)
        test.extend(part.test)
    return SplitAssignment(tuple(train), tuple(val), tuple(test))


def epoch_seconds(timestamp: float | str) -> float:
    """Parse an epoch-seconds number or an ISO-8601 UTC string to seconds."""
    if isinstance(timestamp, (int, float)):
        return check_finite_scalar(float(timestamp), "timestamp")
    text = str(timestamp).strip()
    try:
        return check_finite_scalar(float(text), "timestamp")
    except (InputError, ValueError):
        pass
    from datetime import datetime, timezone

    iso = text.replace("Z", "+00:00")
    try:
        parsed = datetime.fromisoformat(iso)
    except ValueError as exc:
        raise InputError(f"cannot parse timestamp {timestamp!r}: {exc}") from None
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    value = parsed.timestamp()
    if not math.isfinite(value):
        raise InputError(f"timestamp {timestamp!r} out of range")
    return value
