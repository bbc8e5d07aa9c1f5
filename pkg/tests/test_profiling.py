import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from immtsf import MetricError, feature_entropy, mean_ioi, profile_dataset, temporal_entropy
from immtsf.profiling import pooled_mean_ioi

from conftest import make_series, make_text


def oracle_feature_entropy(counts):
    """Straight transcription of the definition, no shortcuts."""
    total = sum(counts)
    acc = 0.0
    for f in counts:
        p = f / total
        acc += p * math.log(p + 1e-12)
    return -acc / math.log(len(counts))


def oracle_temporal_entropy(times, k=10):
    lo, hi = min(times), max(times)
    width = (hi - lo) / k
    counts = [0] * k
    for t in times:
        b = min(int((t - lo) / width), k - 1)
        counts[b] += 1
    acc = 0.0
    for c in counts:
        p = c / len(times)
        acc += p * math.log(p + 1e-12)
    return -acc / math.log(k)


class TestFeatureEntropy:
    def test_uniform_counts_maximal(self):
        assert feature_entropy([5, 5]) == pytest.approx(1.0, abs=1e-6)

    def test_degenerate_single_feature(self):
        assert feature_entropy([10, 0]) == pytest.approx(0.0, abs=1e-6)

    def test_three_to_one(self):
        assert feature_entropy([3, 1]) == pytest.approx(0.811278, abs=1e-5)

    def test_single_feature_rejected(self):
        with pytest.raises(MetricError):
            feature_entropy([10])

    def test_all_zero_rejected(self):
        with pytest.raises(MetricError):
            feature_entropy([0, 0, 0])

    def test_negative_rejected(self):
        with pytest.raises(MetricError):
            feature_entropy([3, -1])

    @given(
        st.lists(st.integers(min_value=0, max_value=10_000), min_size=2, max_size=16).filter(
            lambda c: sum(c) > 0
        )
    )
    def test_bounds_and_scale_invariance(self, counts):
        h = feature_entropy(counts)
        assert 0.0 <= h <= 1.0 + 1e-9
        assert feature_entropy([7 * c for c in counts]) == pytest.approx(h, abs=1e-12)

    @given(
        st.lists(st.integers(min_value=0, max_value=1000), min_size=2, max_size=10).filter(
            lambda c: sum(c) > 0
        ),
        st.randoms(),
    )
    def test_permutation_invariance(self, counts, rnd):
        shuffled = list(counts)
        rnd.shuffle(shuffled)
        assert feature_entropy(shuffled) == pytest.approx(feature_entropy(counts), abs=1e-12)


class TestTemporalEntropy:
    def test_uniform_times_near_one(self):
        times = np.linspace(0, 1000, 10_000)
        assert temporal_entropy(times) >= 0.999

    def test_concentrated_mass_near_zero(self):
        times = np.concatenate([np.linspace(0, 1, 10_000), [1000.0]])
        assert temporal_entropy(times) < 0.1

    def test_zero_range_rejected(self):
        with pytest.raises(MetricError):
            temporal_entropy([5.0, 5.0, 5.0])

    def test_too_few_points(self):
        with pytest.raises(MetricError):
            temporal_entropy([1.0])

    def test_last_bin_right_inclusive(self):
        # the max timestamp must land in bin K-1, not fall off the edge
        times = [0.0, 10.0]
        assert temporal_entropy(times, bins=2) == pytest.approx(1.0, abs=1e-9)

    @given(
        st.integers(min_value=0, max_value=2**31),
        st.floats(min_value=0.1, max_value=50.0),
        st.floats(min_value=-1e5, max_value=1e5),
    )
    def test_affine_time_invariance(self, seed, a, b):
        # continuous draws keep points off bin edges, so the binning is
        # stable under the affine map up to float rounding
        times = np.random.default_rng(seed).uniform(0, 1e6, size=50)
        before = temporal_entropy(times)
        after = temporal_entropy(a * times + b)
        assert after == pytest.approx(before, abs=1e-6)
        assert 0.0 <= before <= 1.0 + 1e-9


class TestMeanIoi:
    def test_minutes(self):
        assert mean_ioi([0.0, 60.0, 180.0], 60.0) == pytest.approx(1.5)

    def test_single_day(self):
        assert mean_ioi([0.0, 86400.0], 86400.0) == pytest.approx(1.0)

    def test_too_few(self):
        with pytest.raises(MetricError):
            mean_ioi([1.0], 60.0)

    def test_pooled_skips_entity_boundaries(self):
        # entity gaps (100 -> 0) must not count as intervals
        value = pooled_mean_ioi([[0.0, 10.0], [100.0, 130.0]], 1.0)
        assert value == pytest.approx((10.0 + 30.0) / 2.0)

    def test_pooled_needs_an_interval(self):
        with pytest.raises(MetricError):
            pooled_mean_ioi([[1.0], [2.0]], 1.0)


class TestProfileDataset:
    def test_even_simple_case(self):
        series = make_series(
            a=(np.linspace(0, 9 * 86400, 10), np.ones(10)),
            b=(np.linspace(0, 9 * 86400, 10), np.ones(10)),
        )
        profile = profile_dataset([(series, make_text())], unit="days")
        assert profile.feature_entropy == pytest.approx(1.0, abs=1e-6)
        assert profile.temporal_entropy == pytest.approx(1.0, abs=1e-2)
        # both variables observed at the same 10 times: 20 pooled points,
        # 19 gaps (half of them zero) over a 9-day span
        assert profile.mean_ioi == pytest.approx(9.0 / 19.0, abs=1e-9)
        assert profile.n_entities == 1
        assert profile.n_features == 2
        assert profile.n_observations == 20
        assert profile.n_unique_timestamps == 10

    def test_zero_text_yields_nan_and_warning(self):
        series = make_series(a=([0.0, 86400.0], [1.0, 2.0]))
        profile = profile_dataset([(series, make_text())], unit="days")
        assert math.isnan(profile.text_temporal_entropy)
        assert any("text_temporal_entropy" in w for w in profile.warnings)
        assert profile.n_text_entries == 0

    def test_empty_dataset_rejected(self):
        with pytest.raises(MetricError):
            profile_dataset([])

    def test_unknown_unit_rejected(self):
        series = make_series(a=([0.0, 1.0], [1.0, 2.0]))
        with pytest.raises(MetricError):
            profile_dataset([(series, make_text())], unit="fortnights")

    def test_matches_brute_force_oracle(self, rng):
        dataset = []
        for e in range(5):
            n = int(rng.integers(5, 40))
            times_a = np.sort(rng.uniform(0, 1e6, size=n))
            times_b = np.sort(rng.uniform(0, 1e6, size=n // 2 + 1))
            series = make_series(
                entity=f"e{e}",
                a=(times_a, rng.normal(size=n)),
                b=(times_b, rng.normal(size=n // 2 + 1)),
            )
            text = make_text(
                entity=f"e{e}",
                times=np.sort(rng.uniform(0, 1e6, size=4)),
                dim=2,
            )
            dataset.append((series, text))

        profile = profile_dataset(dataset, unit="hours")

        counts = {}
        all_times = []
        per_entity = []
        text_times = []
        for series, text in dataset:
            entity_all = []
            for var in series.variables:
                counts[var.name] = counts.get(var.name, 0) + len(var)
                entity_all.extend(var.times)
            all_times.extend(entity_all)
            per_entity.append(sorted(entity_all))
            text_times.extend(text.times)

        assert profile.feature_entropy == pytest.approx(
            oracle_feature_entropy(list(counts.values())), abs=1e-9
        )
        assert profile.temporal_entropy == pytest.approx(
            oracle_temporal_entropy(all_times), abs=1e-9
        )
        gaps = [b - a for ts in per_entity for a, b in zip(ts, ts[1:])]
        assert profile.mean_ioi == pytest.approx(
            sum(gaps) / len(gaps) / 3600.0, abs=1e-9
        )
        assert profile.text_temporal_entropy == pytest.approx(
            oracle_temporal_entropy(text_times), abs=1e-9
        )

    @settings(max_examples=25)
    @given(st.randoms(use_true_random=False))
    def test_entity_permutation_invariance(self, rnd):
        rng = np.random.default_rng(rnd.randint(0, 2**31))
        dataset = []
        for e in range(4):
            n = int(rng.integers(3, 15))
            times = np.sort(rng.uniform(0, 1000, size=n))
            dataset.append(
                (make_series(entity=f"e{e}", a=(times, rng.normal(size=n))), make_text(f"e{e}"))
            )
        base = profile_dataset(dataset, unit="seconds")
        shuffled = list(dataset)
        rnd.shuffle(shuffled)
        other = profile_dataset(shuffled, unit="seconds")
        assert other.feature_entropy == pytest.approx(base.feature_entropy, nan_ok=True)
        assert other.temporal_entropy == pytest.approx(base.temporal_entropy)
        assert other.mean_ioi == pytest.approx(base.mean_ioi)
