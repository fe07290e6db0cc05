import csv
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gensim.experiments import (
    FluctuationInputError,
    RatingDistribution,
    fluctuation,
    run_fluctuation_experiment,
    run_scaling_benchmark,
    write_fluctuation_csv,
    write_scaling_csv,
)


def brute_force_sigma(values):
    """Independent population standard deviation (divide by N)."""
    mean = sum(values) / len(values)
    return math.sqrt(sum((v - mean) ** 2 for v in values) / len(values))


def uniform_dist():
    return RatingDistribution((0.1,) * 10)


class TestRatingDistribution:
    def test_normalization_enforced(self):
        with pytest.raises(FluctuationInputError):
            RatingDistribution((0.2,) * 10)

    def test_length_enforced(self):
        with pytest.raises(FluctuationInputError):
            RatingDistribution((0.5, 0.5))

    def test_from_counts(self):
        d = RatingDistribution.from_counts([1] * 10)
        assert d.p == (0.1,) * 10


class TestFluctuation:
    def test_identical_distributions_zero(self):
        result = fluctuation([uniform_dist() for _ in range(10)])
        assert result.v_sum == pytest.approx(0.0, abs=1e-12)

    def test_hand_computed_two_rating_case(self):
        # three runs with p(r1) = 0.5, 0.6, 0.7 and the complement on r2
        def dist(p1):
            return RatingDistribution((p1, 1.0 - p1) + (0.0,) * 8)

        result = fluctuation([dist(0.5), dist(0.6), dist(0.7)])
        expected = brute_force_sigma([0.5, 0.6, 0.7])
        assert result.per_rating_v[0] == pytest.approx(expected, abs=1e-12)
        assert result.per_rating_v[1] == pytest.approx(expected, abs=1e-12)
        assert result.v_sum == pytest.approx(2 * expected, abs=1e-12)

    def test_single_distribution_rejected(self):
        with pytest.raises(FluctuationInputError):
            fluctuation([uniform_dist()])

    def test_v_sum_equals_component_sum(self):
        rng = random.Random(5)
        dists = []
        for _ in range(6):
            raw = [rng.random() for _ in range(10)]
            total = sum(raw)
            dists.append(RatingDistribution(tuple(x / total for x in raw)))
        result = fluctuation(dists)
        assert result.v_sum == pytest.approx(sum(result.per_rating_v), abs=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=10**9),
           m=st.integers(min_value=2, max_value=12))
    def test_oracle_equivalence(self, seed, m):
        rng = random.Random(seed)
        dists = []
        for _ in range(m):
            raw = [rng.random() + 1e-9 for _ in range(10)]
            total = sum(raw)
            dists.append(RatingDistribution(tuple(x / total for x in raw)))
        result = fluctuation(dists)
        for r in range(10):
            expected = brute_force_sigma([d.p[r] for d in dists])
            assert abs(result.per_rating_v[r] - expected) < 1e-12

    def test_permutation_invariance(self):
        rng = random.Random(1)
        dists = []
        for _ in range(8):
            raw = [rng.random() for _ in range(10)]
            total = sum(raw)
            dists.append(RatingDistribution(tuple(x / total for x in raw)))
        a = fluctuation(dists)
        shuffled = list(dists)
        rng.shuffle(shuffled)
        b = fluctuation(shuffled)
        assert a.v_sum == pytest.approx(b.v_sum, abs=1e-15)
        assert a.per_rating_v == pytest.approx(b.per_rating_v, abs=1e-15)


class TestFluctuationExperiment:
    def test_v_sum_decreases_with_sample_size(self):
        results = run_fluctuation_experiment([100, 1000, 10000], repeats=10, seed=3)
        v = [r.v_sum for r in results]
        assert v[0] > v[1] > v[2]

    def test_degenerate_weights_zero_everywhere(self):
        results = run_fluctuation_experiment(
            [100, 1000], repeats=5, rating_weights=[1.0] + [0.0] * 9, seed=0
        )
        assert all(r.v_sum == 0.0 for r in results)

    def test_deterministic_given_seed(self):
        a = run_fluctuation_experiment([200], repeats=4, seed=9)
        b = run_fluctuation_experiment([200], repeats=4, seed=9)
        assert a[0].v_sum == b[0].v_sum
        assert a[0].per_rating_v == b[0].per_rating_v

    def test_repeats_validated(self):
        with pytest.raises(FluctuationInputError):
            run_fluctuation_experiment([100], repeats=1)

    def test_csv_output(self, tmp_path):
        results = run_fluctuation_experiment([100, 200], repeats=3, seed=1)
        path = tmp_path / "fluctuation.csv"
        write_fluctuation_csv(results, path)
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        assert [int(r["sample_size"]) for r in rows] == [100, 200]
        assert "v_0.5" in rows[0] and "v_5.0" in rows[0]


class TestScalingBenchmark:
    def test_shape_and_csv(self, tmp_path):
        rows = run_scaling_benchmark([4, 8], [2], latency=0.02, seed=0)
        assert len(rows) == 2
        # doubling N at fixed C roughly doubles wall time
        ratio = rows[1]["wall_time_ms"] / rows[0]["wall_time_ms"]
        assert 1.5 < ratio < 2.5
        path = tmp_path / "scaling.csv"
        write_scaling_csv(rows, path)
        with open(path) as fh:
            parsed = list(csv.DictReader(fh))
        assert len(parsed) == 2

    def test_single_wave_when_n_below_c(self):
        rows = run_scaling_benchmark([4], [8], latency=0.05, seed=0)
        wall = rows[0]["wall_time_ms"] / 1000.0
        assert 0.05 <= wall <= 0.05 * 1.25
