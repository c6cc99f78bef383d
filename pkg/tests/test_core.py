"""Tests for the Poisson / Erlang-B primitives."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pullpush.core import erlang_b, poisson_pmf, sample_poisson, sample_poisson_array

# High-precision reference for pmf(12, 12.625), computed by direct
# summation of mu^k e^(-mu) / k! in 50-digit arithmetic.
PMF_12_12625 = 0.1125827475733585711


def erlang_b_direct(servers: int, load: float) -> float:
    """Direct-summation definition: (E^m/m!) / sum_i E^i/i!."""
    if load == 0.0:
        return 1.0 if servers == 0 else 0.0
    log_terms = [i * math.log(load) - math.lgamma(i + 1) for i in range(servers + 1)]
    peak = max(log_terms)
    terms = [math.exp(t - peak) for t in log_terms]
    return terms[-1] / math.fsum(terms)


class TestPoissonPmf:
    def test_empty_process(self):
        assert poisson_pmf(0, 0.0) == 1.0
        assert poisson_pmf(3, 0.0) == 0.0

    def test_direct_definition(self):
        assert poisson_pmf(0, 2.0) == pytest.approx(math.exp(-2.0), rel=1e-15)

    def test_high_precision_reference(self):
        assert poisson_pmf(12, 12.625) == pytest.approx(PMF_12_12625, rel=1e-13)

    def test_negative_mean_rejected(self):
        with pytest.raises(ValueError):
            poisson_pmf(0, -1.0)

    def test_negative_k_rejected(self):
        with pytest.raises(ValueError):
            poisson_pmf(-1, 2.0)

    @pytest.mark.parametrize("mean", [0.5, 1.0, 6.3125, 12.625, 50.0, 100.0])
    def test_partial_sum_reaches_one(self, mean):
        k_top = math.ceil(mean + 12.0 * math.sqrt(mean) + 30.0)
        total = math.fsum(poisson_pmf(k, mean) for k in range(k_top + 1))
        assert total == pytest.approx(1.0, abs=1e-9)
        assert total <= 1.0 + 1e-12

    @given(
        k=st.integers(min_value=0, max_value=400),
        mean=st.floats(min_value=0.0, max_value=150.0, allow_nan=False),
    )
    def test_bounded(self, k, mean):
        assert 0.0 <= poisson_pmf(k, mean) <= 1.0


class TestErlangB:
    def test_no_servers(self):
        assert erlang_b(0, 5.0) == 1.0

    def test_no_load(self):
        assert erlang_b(3, 0.0) == 0.0

    def test_two_servers_unit_load(self):
        # (1/2) / (1 + 1 + 1/2) exactly
        assert erlang_b(2, 1.0) == pytest.approx(0.2, abs=1e-15)

    def test_negative_inputs_rejected(self):
        with pytest.raises(ValueError):
            erlang_b(-1, 1.0)
        with pytest.raises(ValueError):
            erlang_b(2, -0.5)

    @pytest.mark.parametrize("servers", range(0, 26))
    def test_recursion_matches_direct_sum(self, servers):
        for load in (0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 6.3125, 10.0, 21.08375, 30.0, 45.0, 60.0):
            assert abs(erlang_b(servers, load) - erlang_b_direct(servers, load)) < 1e-12

    @given(
        servers=st.integers(min_value=1, max_value=25),
        load=st.floats(min_value=1e-6, max_value=60.0),
    )
    def test_strictly_decreasing_in_servers(self, servers, load):
        assert erlang_b(servers, load) < erlang_b(servers - 1, load)

    @given(
        servers=st.integers(min_value=1, max_value=25),
        load=st.floats(min_value=1e-6, max_value=50.0),
        bump=st.floats(min_value=1e-3, max_value=10.0),
    )
    def test_strictly_increasing_in_load(self, servers, load, bump):
        assert erlang_b(servers, load + bump) > erlang_b(servers, load)


class TestSamplePoisson:
    def test_degenerate(self):
        rng = np.random.default_rng(0)
        assert sample_poisson(0.0, rng) == 0

    def test_negative_mean_rejected(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            sample_poisson(-0.1, rng)

    def test_identical_seeds_identical_sequences(self):
        a = np.random.default_rng(1234)
        b = np.random.default_rng(1234)
        draws_a = [sample_poisson(6.3125, a) for _ in range(1000)]
        draws_b = [sample_poisson(6.3125, b) for _ in range(1000)]
        assert draws_a == draws_b

    def test_array_matches_seeded_rerun(self):
        a = sample_poisson_array(12.625, 5000, np.random.default_rng(77))
        b = sample_poisson_array(12.625, 5000, np.random.default_rng(77))
        assert np.array_equal(a, b)

    def test_law_of_large_numbers(self):
        rng = np.random.default_rng(2024)
        draws = sample_poisson_array(12.625, 1_000_000, rng)
        sigma = math.sqrt(12.625 / 1_000_000)
        assert abs(draws.mean() - 12.625) < 4.0 * sigma

    def test_variance_matches_mean(self):
        rng = np.random.default_rng(99)
        draws = sample_poisson_array(6.3125, 1_000_000, rng)
        assert draws.var() == pytest.approx(6.3125, rel=0.05)

    def test_small_mean_distribution(self):
        # Single-chunk regime: frequency of zero should match exp(-mean).
        rng = np.random.default_rng(5)
        draws = sample_poisson_array(0.98475, 500_000, rng)
        p0 = np.mean(draws == 0)
        assert p0 == pytest.approx(math.exp(-0.98475), abs=4 * math.sqrt(0.37 * 0.63 / 500_000))

    @given(mean=st.floats(min_value=0.0, max_value=80.0), seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=200)
    def test_nonnegative_and_deterministic(self, mean, seed):
        x = sample_poisson(mean, np.random.default_rng(seed))
        y = sample_poisson(mean, np.random.default_rng(seed))
        assert x == y >= 0
