"""Percentile-bootstrap stability intervals."""

import numpy as np
import pytest

from bibliorank.stability import (
    AllResamplesUndefinedError,
    StabilityInterval,
    bootstrap_interval,
    bootstrap_intervals,
    resample_indices,
)


def mean_stat(values) -> float:
    return float(np.mean(np.asarray(values, dtype=float)))


class TestMechanics:
    def test_identical_publications_collapse(self):
        values = np.full(50, 3.25)
        interval = bootstrap_interval(values, mean_stat, samples=200, seed=1)
        assert interval.lower == interval.upper == interval.point == 3.25

    def test_single_publication(self):
        interval = bootstrap_interval(np.array([7.0]), mean_stat, samples=100, seed=2)
        assert interval.lower == interval.upper == interval.point == 7.0

    def test_deterministic_under_seed(self):
        rng = np.random.default_rng(3)
        values = rng.normal(size=200)
        a = bootstrap_interval(values, mean_stat, samples=500, seed=42)
        b = bootstrap_interval(values, mean_stat, samples=500, seed=42)
        assert a == b
        c = bootstrap_interval(values, mean_stat, samples=500, seed=43)
        assert c != a

    def test_resample_indices_depend_only_on_seed_and_index(self):
        first = resample_indices(9, 17, 100)
        second = resample_indices(9, 17, 100)
        assert np.array_equal(first, second)
        assert not np.array_equal(first, resample_indices(9, 18, 100))

    def test_evaluation_order_irrelevant(self):
        rng = np.random.default_rng(5)
        values = rng.normal(size=150)
        single = bootstrap_interval(values, mean_stat, samples=300, seed=7)
        shared = bootstrap_intervals(
            values, {"other": lambda xs: float(np.max(xs)), "mean": mean_stat},
            samples=300, seed=7,
        )
        assert shared["mean"] == single

    def test_monotone_level_nesting(self):
        rng = np.random.default_rng(11)
        values = rng.exponential(size=300)
        wide = bootstrap_interval(values, mean_stat, samples=400, level=95.0, seed=13)
        narrow = bootstrap_interval(values, mean_stat, samples=400, level=90.0, seed=13)
        assert wide.lower <= narrow.lower
        assert narrow.upper <= wide.upper

    def test_undefined_resamples_excluded_and_counted(self):
        # statistic undefined whenever the resample misses value 1.0
        values = np.array([1.0] + [0.0] * 9)

        def picky(xs) -> float | None:
            return float(np.mean(xs)) if np.any(xs == 1.0) else None

        interval = bootstrap_interval(values, picky, samples=300, seed=17)
        assert interval.undefined_count > 0
        assert interval.undefined_count < 300

    def test_all_undefined_raises(self):
        values = np.zeros(5)
        with pytest.raises(AllResamplesUndefinedError):
            bootstrap_interval(values, lambda xs: None, samples=50, seed=19)

    def test_empty_publication_set_rejected(self):
        with pytest.raises(ValueError):
            bootstrap_interval(np.array([]), mean_stat, samples=10, seed=1)

    def test_bad_parameters_rejected(self):
        values = np.ones(3)
        with pytest.raises(ValueError):
            bootstrap_interval(values, mean_stat, samples=0, seed=1)
        with pytest.raises(ValueError):
            bootstrap_interval(values, mean_stat, level=0.0, seed=1)
        with pytest.raises(ValueError):
            bootstrap_interval(values, mean_stat, level=100.0, seed=1)

    def test_object_sequences_supported(self):
        pubs = [("a", 1.0), ("b", 2.0), ("c", 3.0)]

        def weight_mean(items) -> float:
            return float(np.mean([w for _, w in items]))

        interval = bootstrap_interval(pubs, weight_mean, samples=100, seed=23)
        assert 1.0 <= interval.lower <= interval.upper <= 3.0

    def test_point_outside_flag(self):
        interval = StabilityInterval(
            point=5.0, lower=1.0, upper=2.0, samples=10, level=95.0, seed=0
        )
        assert interval.point_outside
        inside = StabilityInterval(
            point=1.5, lower=1.0, upper=2.0, samples=10, level=95.0, seed=0
        )
        assert not inside.point_outside

    def test_width(self):
        interval = StabilityInterval(
            point=1.5, lower=1.0, upper=2.0, samples=10, level=95.0, seed=0
        )
        assert interval.width == pytest.approx(1.0)


class TestStatisticalBehavior:
    def test_large_n_narrows_intervals(self):
        # median width over seeded ensembles drops when n grows 10x
        rng = np.random.default_rng(29)
        widths = {}
        for n in (200, 2000):
            ws = []
            for trial in range(12):
                values = rng.normal(loc=1.0, scale=1.0, size=n)
                interval = bootstrap_interval(
                    values, mean_stat, samples=300, seed=3000 + trial
                )
                ws.append(interval.width)
            widths[n] = float(np.median(ws))
        assert widths[2000] < widths[200]

    def test_skewed_outlier_widens_interval(self):
        rng = np.random.default_rng(31)
        base = rng.poisson(3.0, size=400).astype(float)
        with_outlier = base.copy()
        with_outlier[0] = 16000.0
        narrow = bootstrap_interval(base, mean_stat, samples=400, seed=37)
        wide = bootstrap_interval(with_outlier, mean_stat, samples=400, seed=37)
        assert wide.width > 3.0 * narrow.width
