"""Deterministic synthetic datasets for end-to-end testing.

Three regimes:

* uniform: a regular grid thinned at random, values a Gaussian random
  walk; the temporally best-behaved case.
* bursty: a two-state renewal process whose burst state packs
  observations 10x closer than the quiet state, so temporal entropy
  visibly drops against the uniform regime at equal counts.
* text-informative: a regular grid of i.i.d. standard normal values
  where each text record published at one observation announces the
  value of the NEXT observation in its leading embedding components
  (plus optional Gaussian noise). The numbers alone are unpredictable,
  so every point of forecast skill must come from reading the text; at
  noise_std=0 a linear readout of the latest text recovers the future
  value exactly.

Everything is drawn from one seeded generator: same spec, same bytes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InputError
from .series import IrregularSeries, TextStream, VariableTrack, WindowSpec

KINDS = ("uniform", "bursty", "text-informative")

DAY = 86400.0


@dataclass(frozen=True)
class SynthSpec:
    kind: str = "uniform"
    n_entities: int = 4
    n_variables: int = 1
    n_observations: int = 120
    context_duration: float = 2 * DAY
    horizon_duration: float = DAY
    noise_std: float = 0.0
    embed_dim: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown synthetic kind {self.kind!r}; expected one of {KINDS}")
        if min(self.n_entities, self.n_variables, self.n_observations) < 1:
            raise InputError("entity, variable and observation counts must be >= 1")
        if self.noise_std < 0:
            raise InputError(f"noise_std must be >= 0, got {self.noise_std}")
        if self.embed_dim < self.n_variables:
            raise InputError(
                f"embed_dim {self.embed_dim} cannot hold {self.n_variables} announced values"
            )
        if self.context_duration <= 0 or self.horizon_duration <= 0:
            raise InputError("durations must be positive")

    @property
    def window(self) -> WindowSpec:
        return WindowSpec(self.context_duration, self.horizon_duration)


def _uniform_times(spec: SynthSpec, rng) -> np.ndarray:
    """Regular grid at half the horizon, each point kept with p=0.7."""
    step = spec.horizon_duration / 2.0
    keep_p = 0.7
    grid_len = int(np.ceil(spec.n_observations / keep_p)) * 2 + 8
    kept = np.flatnonzero(rng.random(grid_len) < keep_p)[: spec.n_observations]
    while kept.size < spec.n_observations:
        grid_len *= 2
        kept = np.flatnonzero(rng.random(grid_len) < keep_p)[: spec.n_observations]
    return kept * step


def _bursty_times(spec: SynthSpec, rng) -> np.ndarray:
    """Exponential dwell in burst/quiet states; burst gaps are 10x shorter."""
    quiet_gap = spec.horizon_duration / 2.0
    burst_gap = quiet_gap / 10.0
    dwell_mean = 8.0
    times = [0.0]
    in_burst = False
    remaining = rng.exponential(dwell_mean)
    while len(times) < spec.n_observations:
        gap = rng.exponential(burst_gap if in_burst else quiet_gap)
        times.append(times[-1] + gap)
        remaining -= 1.0
        if remaining <= 0:
            in_burst = not in_burst
            remaining = rng.exponential(dwell_mean)
    return np.array(times[: spec.n_observations])


def _random_walk_values(n, rng):
    return np.cumsum(rng.normal(0.0, 1.0, size=n))


def generate(spec: SynthSpec):
    """Build (series list, text stream list, ground-truth description)."""
    rng = np.random.default_rng(spec.seed)
    series_list = []
    text_list = []

    for e in range(spec.n_entities):
        entity = f"entity{e:02d}"
        if spec.kind == "text-informative":
            series, text = _generate_text_informative(spec, entity, rng)
        else:
            times_fn = _uniform_times if spec.kind == "uniform" else _bursty_times
            tracks = []
            for v in range(spec.n_variables):
                times = times_fn(spec, rng)
                tracks.append(
                    VariableTrack(f"var{v}", times, _random_walk_values(times.size, rng))
                )
            series = IrregularSeries(entity, tuple(tracks))
            first, last = series.time_span()
            n_texts = max(spec.n_observations // 5, 1)
            text_times = np.sort(rng.uniform(first, last, size=n_texts))
            embs = rng.normal(0.0, 1.0, size=(n_texts, spec.embed_dim)) / np.sqrt(
                spec.embed_dim
            )
            text = TextStream(entity, text_times, embs)
        series_list.append(series)
        text_list.append(text)

    truth = {
        "kind": spec.kind,
        "n_entities": spec.n_entities,
        "n_variables": spec.n_variables,
        "n_observations": spec.n_observations,
        "noise_std": spec.noise_std,
        "seed": spec.seed,
        "embed_dim": spec.embed_dim,
        "context_duration": spec.context_duration,
        "horizon_duration": spec.horizon_duration,
    }
    if spec.kind == "text-informative":
        truth.update(
            step_seconds=spec.horizon_duration,
            announcement=(
                "embedding[j] of the text at observation time t_i equals the "
                "value of variable j at t_{i+1}, plus noise_std noise"
            ),
            informative_components=spec.n_variables,
            value_distribution="iid standard normal per variable and time",
        )
    else:
        truth.update(values="gaussian random walk per variable")
    return series_list, text_list, truth


def _generate_text_informative(spec: SynthSpec, entity: str, rng):
    """Regular grid; texts at each observation announce the next values."""
    step = spec.horizon_duration
    times = np.arange(spec.n_observations, dtype=np.float64) * step
    values = rng.normal(0.0, 1.0, size=(spec.n_observations, spec.n_variables))
    tracks = tuple(
        VariableTrack(f"var{v}", times, values[:, v]) for v in range(spec.n_variables)
    )
    embs = np.zeros((spec.n_observations - 1, spec.embed_dim))
    embs[:, : spec.n_variables] = values[1:]
    if spec.noise_std > 0:
        embs[:, : spec.n_variables] += rng.normal(
            0.0, spec.noise_std, size=(spec.n_observations - 1, spec.n_variables)
        )
    text = TextStream(entity, times[:-1].copy(), embs)
    return IrregularSeries(entity, tracks), text
