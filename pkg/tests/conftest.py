import numpy as np
import pytest

from immtsf import ForecastWindow, IrregularSeries, TextStream, VariableTrack


def make_series(entity="e0", **tracks):
    """Build a series from name=(times, values) keyword pairs."""
    return IrregularSeries(
        entity,
        tuple(
            VariableTrack(name, np.asarray(t, dtype=np.float64), np.asarray(v, dtype=np.float64))
            for name, (t, v) in tracks.items()
        ),
    )


def make_text(entity="e0", times=(), embeddings=None, dim=3):
    times = np.asarray(times, dtype=np.float64)
    if embeddings is None:
        embeddings = np.zeros((times.size, dim))
    return TextStream(entity, times, np.asarray(embeddings, dtype=np.float64))


def make_window(
    past,
    query_times,
    query_values,
    t_start=None,
    t_cut=None,
    t_end=None,
    text=None,
):
    """Assemble a ForecastWindow; bounds default to snug values."""
    first, last = past.time_span()
    flat_q = np.concatenate([np.atleast_1d(np.asarray(q, dtype=np.float64)) for q in query_times])
    t_start = first if t_start is None else t_start
    t_cut = last if t_cut is None else t_cut
    t_end = float(flat_q.max()) if t_end is None else t_end
    return ForecastWindow(
        entity_id=past.entity_id,
        t_start=float(t_start),
        t_cut=float(t_cut),
        t_end=float(t_end),
        past=past,
        text_past=text if text is not None else make_text(past.entity_id),
        query_times=tuple(np.atleast_1d(np.asarray(q, dtype=np.float64)) for q in query_times),
        query_values=tuple(np.atleast_1d(np.asarray(v, dtype=np.float64)) for v in query_values),
    )


def random_window(rng, n_variables=None, with_text=True, embed_dim=3):
    """A random but always-valid forecast window."""
    n = n_variables or rng.integers(1, 4)
    t_start = float(rng.uniform(0, 100))
    span = float(rng.uniform(10, 50))
    t_cut = t_start + span
    t_end = t_cut + float(rng.uniform(5, 30))
    tracks = []
    query_times = []
    query_values = []
    got_past = False
    got_query = False
    for v in range(n):
        n_past = int(rng.integers(0 if got_past else 1, 6))
        times = np.sort(rng.uniform(t_start, t_cut, size=n_past))
        times = np.unique(times)
        tracks.append(VariableTrack(f"var{v}", times, rng.normal(size=times.size)))
        got_past = got_past or times.size > 0
        n_q = int(rng.integers(0 if got_query else 1, 4))
        qt = np.unique(np.sort(rng.uniform(t_cut + 1e-6, t_end, size=n_q)))
        query_times.append(qt)
        query_values.append(rng.normal(size=qt.size))
        got_query = got_query or qt.size > 0
    past = IrregularSeries("e0", tuple(tracks))
    if with_text and rng.random() < 0.8:
        n_texts = int(rng.integers(1, 5))
        text = make_text(
            "e0",
            np.sort(rng.uniform(t_start, t_cut, size=n_texts)),
            rng.normal(size=(n_texts, embed_dim)),
        )
    else:
        text = make_text("e0", dim=embed_dim)
    return ForecastWindow(
        entity_id="e0",
        t_start=t_start,
        t_cut=t_cut,
        t_end=t_end,
        past=past,
        text_past=text,
        query_times=tuple(query_times),
        query_values=tuple(query_values),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
