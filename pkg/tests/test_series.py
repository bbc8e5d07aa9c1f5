import numpy as np
import pytest

from immtsf import (
    ForecastWindow,
    InputError,
    IrregularSeries,
    Observation,
    TextStream,
    VariableTrack,
    WindowSpec,
    epoch_seconds,
)

from conftest import make_series, make_text, make_window


class TestVariableTrack:
    def test_strictly_increasing_required(self):
        with pytest.raises(InputError):
            VariableTrack("x", [0.0, 1.0, 1.0], [1.0, 2.0, 3.0])
        with pytest.raises(InputError):
            VariableTrack("x", [2.0, 1.0], [1.0, 2.0])

    def test_length_mismatch(self):
        with pytest.raises(InputError):
            VariableTrack("x", [0.0, 1.0], [1.0])

    def test_non_finite_rejected(self):
        with pytest.raises(InputError):
            VariableTrack("x", [0.0, np.nan], [1.0, 2.0])
        with pytest.raises(InputError):
            VariableTrack("x", [0.0, 1.0], [1.0, np.inf])

    def test_from_observations_sorts(self):
        track = VariableTrack.from_observations(
            "x", [Observation(5.0, 50.0), Observation(1.0, 10.0)]
        )
        assert list(track.times) == [1.0, 5.0]
        assert list(track.values) == [10.0, 50.0]

    def test_arrays_frozen(self):
        track = VariableTrack("x", [0.0, 1.0], [1.0, 2.0])
        with pytest.raises(ValueError):
            track.times[0] = 9.0

    def test_empty_track_allowed(self):
        assert len(VariableTrack("x", [], [])) == 0


class TestIrregularSeries:
    def test_duplicate_variable_names(self):
        track = VariableTrack("x", [0.0], [1.0])
        with pytest.raises(InputError):
            IrregularSeries("e0", (track, track))

    def test_no_variables(self):
        with pytest.raises(InputError):
            IrregularSeries("e0", ())

    def test_span_and_counts(self):
        s = make_series(a=([0.0, 10.0], [1.0, 2.0]), b=([5.0], [3.0]))
        assert s.time_span() == (0.0, 10.0)
        assert s.n_observations == 3
        assert s.variable_names == ("a", "b")

    def test_restricted_closed_interval(self):
        s = make_series(a=([0.0, 5.0, 10.0], [1.0, 2.0, 3.0]))
        r = s.restricted(0.0, 5.0)
        assert list(r.variables[0].times) == [0.0, 5.0]


class TestTextStream:
    def test_nondecreasing_times(self):
        with pytest.raises(InputError):
            TextStream("e0", np.array([2.0, 1.0]), np.zeros((2, 3)))

    def test_ties_allowed(self):
        ts = TextStream("e0", np.array([1.0, 1.0]), np.zeros((2, 3)))
        assert len(ts) == 2

    def test_restricted(self):
        ts = make_text(times=[0.0, 5.0, 9.0], dim=2)
        assert len(ts.restricted(1.0, 9.0)) == 2

    def test_dim_of_empty(self):
        assert make_text(dim=7).dim == 7


class TestWindowSpec:
    def test_stride_defaults_to_horizon(self):
        spec = WindowSpec(context_duration=10.0, horizon_duration=4.0)
        assert spec.stride == 4.0

    @pytest.mark.parametrize("kwargs", [
        {"context_duration": 0.0, "horizon_duration": 1.0},
        {"context_duration": 1.0, "horizon_duration": -1.0},
        {"context_duration": 1.0, "horizon_duration": 1.0, "stride": 0.0},
    ])
    def test_positive_durations(self, kwargs):
        with pytest.raises(InputError):
            WindowSpec(**kwargs)


class TestForecastWindow:
    def test_bounds_ordering(self):
        past = make_series(a=([0.0], [1.0]))
        with pytest.raises(InputError):
            make_window(past, [[1.0]], [[2.0]], t_start=5.0, t_cut=1.0, t_end=10.0)

    def test_queries_must_lie_in_horizon(self):
        past = make_series(a=([0.0, 1.0], [1.0, 2.0]))
        with pytest.raises(InputError):
            make_window(past, [[0.5]], [[2.0]], t_cut=1.0, t_end=10.0)
        with pytest.raises(InputError):
            make_window(past, [[11.0]], [[2.0]], t_cut=1.0, t_end=10.0)

    def test_distinct_times(self):
        past = make_series(a=([0.0, 1.0], [1.0, 2.0]), b=([1.0, 2.0], [5.0, 6.0]))
        w = make_window(past, [[3.0, 4.0], [4.0]], [[1.0, 2.0], [3.0]], t_cut=2.0, t_end=4.0)
        assert list(w.distinct_past_times()) == [0.0, 1.0, 2.0]
        assert list(w.distinct_query_times()) == [3.0, 4.0]
        assert w.n_queries == 3

    def test_normalize_time(self):
        past = make_series(a=([0.0, 10.0], [1.0, 2.0]))
        w = make_window(past, [[20.0]], [[1.0]], t_start=0.0, t_cut=10.0, t_end=20.0)
        assert w.normalize_time(10.0) == pytest.approx(0.5)
        assert w.normalize_time([0.0, 20.0]) == pytest.approx([0.0, 1.0])


class TestEpochSeconds:
    def test_passthrough_float(self):
        assert epoch_seconds(12.5) == 12.5
        assert epoch_seconds("12.5") == 12.5

    def test_iso_utc(self):
        assert epoch_seconds("1970-01-01T00:00:00Z") == 0.0
        assert epoch_seconds("1970-01-02T00:00:00+00:00") == 86400.0

    def test_naive_treated_as_utc(self):
        assert epoch_seconds("1970-01-01T01:00:00") == 3600.0

    def test_unparseable(self):
        with pytest.raises(InputError):
            epoch_seconds("yesterday")
