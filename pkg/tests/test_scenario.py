import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adeqmc import scenario
from adeqmc.rng import stream
from adeqmc.scenario import (
    DAYS_PER_YEAR,
    HOURS_PER_DAY,
    HOURS_PER_YEAR,
    ProfileLibrary,
    SynthParams,
    ThermalFleet,
)


def _write_csv(path, arr):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(f"year_{i + 1}" for i in range(arr.shape[0])) + "\n")
        for row in arr.T:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


class TestProfileIO:
    def test_single_zero_wind_column(self, tmp_path):
        _write_csv(tmp_path / "wind.csv", np.zeros((1, HOURS_PER_YEAR)))
        _write_csv(tmp_path / "demand.csv", np.ones((1, HOURS_PER_YEAR)))
        lib = scenario.load_profiles(tmp_path)
        assert lib.n_wind == 1
        assert np.all(lib.wind_years == 0.0)

    def test_short_file_reports_length_mismatch(self, tmp_path):
        _write_csv(tmp_path / "wind.csv", np.zeros((1, HOURS_PER_YEAR - 1)))
        _write_csv(tmp_path / "demand.csv", np.ones((1, HOURS_PER_YEAR)))
        with pytest.raises(ValueError, match="length mismatch"):
            scenario.load_profiles(tmp_path)

    def test_malformed_value_reports_line(self, tmp_path):
        arr = np.ones((2, HOURS_PER_YEAR))
        _write_csv(tmp_path / "wind.csv", arr)
        _write_csv(tmp_path / "demand.csv", arr)
        lines = (tmp_path / "wind.csv").read_text().splitlines()
        lines[5] = "1.0,bogus"
        (tmp_path / "wind.csv").write_text("\n".join(lines) + "\n")
        with pytest.raises(ValueError, match=":6:"):
            scenario.load_profiles(tmp_path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            scenario.load_profiles(tmp_path)

    def test_synthetic_round_trip_bit_exact(self, tmp_path, small_profiles):
        scenario.save_profiles(small_profiles, tmp_path)
        lib = scenario.load_profiles(tmp_path)
        assert np.array_equal(lib.wind_years, small_profiles.wind_years)
        assert np.array_equal(lib.demand_years, small_profiles.demand_years)


class TestSynthProfiles:
    def test_counts_and_shapes(self):
        lib = scenario.synth_profiles(30, 10, stream(1, "profiles"))
        assert lib.wind_years.shape == (30, HOURS_PER_YEAR)
        assert lib.demand_years.shape == (10, HOURS_PER_YEAR)

    def test_same_seed_identical(self):
        a = scenario.synth_profiles(4, 3, stream(5, "profiles"))
        b = scenario.synth_profiles(4, 3, stream(5, "profiles"))
        assert np.array_equal(a.wind_years, b.wind_years)
        assert np.array_equal(a.demand_years, b.demand_years)

    def test_zero_noise_reproduces_base_pattern(self):
        p = SynthParams(wind_noise=0.0, demand_noise=0.0)
        lib = scenario.synth_profiles(3, 3, stream(0, "profiles"), p)
        for years in (lib.wind_years, lib.demand_years):
            assert np.array_equal(years[0], years[1])
            assert np.array_equal(years[0], years[2])
        # base wind pattern is the seasonal cosine around the mean
        t = np.arange(HOURS_PER_YEAR)
        base = p.wind_mean * (1 + p.wind_seasonal_amp * np.cos(2 * np.pi * t / HOURS_PER_YEAR))
        assert np.allclose(lib.wind_years[0], np.maximum(0.0, base))

    def test_rejects_zero_counts(self):
        with pytest.raises(ValueError):
            scenario.synth_profiles(0, 1, stream(0, "profiles"))


class TestAvailableCapacity:
    def test_full_availability_constant(self):
        fleet = ThermalFleet(capacities=[100.0] * 12, availability=1.0)
        trace = scenario.sample_available_capacity(fleet, stream(0, "cap"))
        assert np.all(trace == 1200.0)

    def test_iid_mean_matches_bernoulli(self):
        fleet = ThermalFleet(capacities=[100.0] * 12, availability=0.9)
        rng = stream(3, "cap")
        traces = [scenario.sample_available_capacity(fleet, rng) for _ in range(20)]
        mean = np.mean(traces)
        # mean of sum of 12 Bernoulli(0.9)*100; se over 20*8760 draws
        se = np.std(traces) / np.sqrt(20 * HOURS_PER_YEAR)
        assert abs(mean - 1080.0) < 4 * se + 1e-9

    def test_markov_stationary_fraction(self):
        fleet = ThermalFleet(
            capacities=[50.0], availability=0.9,
            outage_model="two_state_markov", mttr_hours=8.0,
        )
        rng = stream(4, "cap")
        n_hours = 200_000
        trace = scenario.sample_available_capacity(fleet, rng, n_hours=n_hours)
        up_frac = np.mean(trace > 0)
        # autocorrelated chain: effective sample size ~ n / (2*mttr)
        se = np.sqrt(0.9 * 0.1 / (n_hours / 16))
        assert abs(up_frac - 0.9) < 4 * se

    def test_markov_capacity_values_are_sums_of_units(self):
        fleet = ThermalFleet(
            capacities=[100.0, 50.0], availability=0.8,
            outage_model="two_state_markov", mttr_hours=4.0,
        )
        trace = scenario.sample_available_capacity(fleet, stream(5, "cap"), n_hours=500)
        assert set(np.unique(trace)) <= {0.0, 50.0, 100.0, 150.0}


class TestMarginSampling:
    def test_constant_components(self):
        lib = ProfileLibrary(
            wind_years=np.zeros((1, HOURS_PER_YEAR)),
            demand_years=np.zeros((1, HOURS_PER_YEAR)),
        )
        fleet = ThermalFleet(capacities=[100.0] * 12, availability=1.0)
        z = scenario.sample_margin_year(fleet, lib, stream(0, "m"))
        assert np.all(z == 1200.0)

    def test_exact_cancellation(self):
        lib = ProfileLibrary(
            wind_years=np.full((1, HOURS_PER_YEAR), 5.0),
            demand_years=np.full((1, HOURS_PER_YEAR), 1205.0),
        )
        fleet = ThermalFleet(capacities=[100.0] * 12, availability=1.0)
        z = scenario.sample_margin_year(fleet, lib, stream(0, "m"))
        assert np.all(z == 0.0)

    def test_mean_margin_linearity(self, small_profiles):
        fleet = ThermalFleet(capacities=[100.0] * 12, availability=0.9)
        rng = stream(9, "m")
        n = 60
        means = [scenario.sample_margin_year(fleet, small_profiles, rng).mean()
                 for _ in range(n)]
        expected = (
            0.9 * fleet.total_capacity
            + small_profiles.wind_years.mean()
            - small_profiles.demand_years.mean()
        )
        se = np.std(means, ddof=1) / np.sqrt(n)
        assert abs(np.mean(means) - expected) < 4 * se


class TestSplitDays:
    def test_indexing_identity(self):
        days = scenario.split_days(np.arange(HOURS_PER_YEAR, dtype=float))
        assert np.array_equal(days[0], np.arange(24.0))
        assert np.array_equal(days[364], np.arange(8736.0, 8760.0))

    def test_constant_trace(self):
        days = scenario.split_days(np.full(HOURS_PER_YEAR, 7.0))
        assert days.shape == (DAYS_PER_YEAR, HOURS_PER_DAY)
        assert np.all(days == 7.0)

    def test_wrong_length_rejected(self):
        with pytest.raises(ValueError):
            scenario.split_days(np.zeros(100))

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_split_concatenate_round_trip(self, seed):
        trace = np.random.default_rng(seed).normal(size=HOURS_PER_YEAR)
        assert np.array_equal(scenario.split_days(trace).reshape(-1), trace)


class TestSampleMarginDays:
    def test_shape_and_determinism(self, small_profiles):
        fleet = ThermalFleet(capacities=[100.0] * 4, availability=0.9)
        a = scenario.sample_margin_days(fleet, small_profiles, 50, stream(2, "d"))
        b = scenario.sample_margin_days(fleet, small_profiles, 50, stream(2, "d"))
        assert a.shape == (50, HOURS_PER_DAY)
        assert np.array_equal(a, b)

    def test_rejects_zero(self, small_profiles):
        fleet = ThermalFleet(capacities=[100.0], availability=0.9)
        with pytest.raises(ValueError):
            scenario.sample_margin_days(fleet, small_profiles, 0, stream(0, "d"))
