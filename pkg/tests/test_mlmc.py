import math

import numpy as np
import pytest

from adeqmc import mlmc
from adeqmc.clock import SyntheticClock, WallClock
from adeqmc.mlmc import (
    BreakEven,
    Level,
    LevelStats,
    allocate_samples,
    break_even,
    performance,
    pilot,
    predicted_variance,
    run_mlmc,
    run_plain_mc,
    speed,
)
from adeqmc.rng import stream


def const_level(value, name="const"):
    return Level(name=name, evaluate=lambda z: (value, value), cost_kind="exact_year")


def make_stats(sigmas, taus):
    return [
        LevelStats(name=f"l{i}", mean_lol=0.0, mean_ens=0.0,
                   std_lol=s, std_ens=s, tau=t, n=100)
        for i, (s, t) in enumerate(zip(sigmas, taus))
    ]


def uniform_source(rng):
    return rng.random()


class TestPilot:
    def test_constant_evaluator_zero_std(self):
        stats = pilot([const_level(3.0)], uniform_source, 10,
                      stream(0, "p"), SyntheticClock())
        assert stats[0].mean_ens == 3.0
        assert stats[0].std_ens == 0.0
        assert stats[0].tau > 0

    def test_identical_models_zero_level2(self):
        f = lambda z: (z, 2 * z)
        levels = [Level("a", f, "surrogate_year"), Level("b", f, "exact_year")]
        stats = pilot(levels, uniform_source, 25, stream(1, "p"), SyntheticClock())
        assert stats[1].mean_ens == 0.0
        assert stats[1].std_ens == 0.0

    def test_single_level_reduces_to_plain_statistics(self):
        rng = stream(2, "p")
        level = Level("a", lambda z: (z, z), "exact_year")
        stats = pilot([level], uniform_source, 400, rng, SyntheticClock())
        assert stats[0].mean_ens == pytest.approx(0.5, abs=0.1)
        assert stats[0].std_ens == pytest.approx(math.sqrt(1 / 12), abs=0.05)

    def test_small_pilot_rejected(self):
        with pytest.raises(ValueError):
            pilot([const_level(1.0)], uniform_source, 1, stream(0, "p"), SyntheticClock())

    def test_two_level_sigma_matches_enumeration(self):
        # finite scenario space {0, 1}; f1(z)=z, f2(z)=3z -> Y2 = 2z,
        # Var(Y2) = 4 * 1/4 = 1 exactly
        levels = [Level("a", lambda z: (z, z), "surrogate_year"),
                  Level("b", lambda z: (3 * z, 3 * z), "exact_year")]
        source = lambda rng: float(rng.integers(2))
        stats = pilot(levels, source, 2000, stream(3, "p"), SyntheticClock())
        assert stats[1].std_ens == pytest.approx(1.0, abs=0.1)


class TestAllocation:
    def test_single_level_budget_over_cost(self):
        stats = make_stats([1.0], [0.01])
        assert allocate_samples(stats, 10.0) == [1000]

    def test_two_level_ratio_six_to_one(self):
        stats = make_stats([3.0, 1.0], [1.0, 4.0])
        alloc = allocate_samples(stats, 2000.0)
        assert alloc[0] / alloc[1] == pytest.approx(6.0, rel=0.02)

    def test_zero_variance_level_gets_minimum(self):
        stats = make_stats([1.0, 0.0], [0.01, 1.0])
        alloc = allocate_samples(stats, 100.0)
        assert alloc[1] == mlmc.N_MIN

    def test_budget_fully_spent(self):
        stats = make_stats([2.0, 0.5], [0.5, 2.0])
        alloc = allocate_samples(stats, 300.0)
        cost = alloc[0] * 0.5 + alloc[1] * 2.0
        assert 300.0 - 2.0 < cost <= 300.0

    def test_infeasible_budget_rejected(self):
        with pytest.raises(ValueError, match="cannot afford"):
            allocate_samples(make_stats([1.0, 1.0], [1.0, 1.0]), 3.0)

    def test_perturbations_never_beat_optimum(self):
        sigmas, taus = [3.0, 1.0], [1.0, 4.0]
        stats = make_stats(sigmas, taus)
        t = 2000.0
        alloc = allocate_samples(stats, t)
        base = predicted_variance(stats, alloc)
        budget = alloc[0] * taus[0] + alloc[1] * taus[1]
        rng = np.random.default_rng(0)
        for _ in range(50):
            n0 = alloc[0] * (1 + rng.uniform(-0.1, 0.1))
            n1 = (budget - n0 * taus[0]) / taus[1]
            if n1 < 1:
                continue
            var = sigmas[0] ** 2 / n0 + sigmas[1] ** 2 / n1
            assert var >= base - 1e-9


class TestRunMLMC:
    def test_identical_models_estimate_is_level1_mean(self):
        f = lambda z: (z, z)
        levels = [Level("a", f, "surrogate_year"), Level("b", f, "exact_year")]
        res = run_mlmc(levels, uniform_source, [50, 10], stream(4, "m"), SyntheticClock())
        assert res.level_stats[1].mean_ens == 0.0
        assert res.se_ens == pytest.approx(res.level_stats[0].std_ens / math.sqrt(50))
        assert res.est_ens == pytest.approx(res.level_stats[0].mean_ens)

    def test_telescoping_on_finite_space(self):
        # exhaustive four-scenario space; expectations computed exactly
        space = [0.0, 1.0, 2.0, 3.0]
        f1 = lambda z: (0.5 * z, z * z)
        f2 = lambda z: (z, z * z + z)
        e_f2 = np.mean([f2(z)[1] for z in space])
        e_y1 = np.mean([f1(z)[1] for z in space])
        e_y2 = np.mean([f2(z)[1] - f1(z)[1] for z in space])
        assert abs((e_y1 + e_y2) - e_f2) <= 1e-12 * max(1.0, abs(e_f2))

    def test_allocation_length_checked(self):
        with pytest.raises(ValueError):
            run_mlmc([const_level(1.0)], uniform_source, [2, 2],
                     stream(0, "m"), SyntheticClock())

    def test_reported_t_sim_includes_extra(self):
        clock = SyntheticClock({"gen_year": 0.0, "exact_year": 1.0})
        res = run_mlmc([const_level(1.0)], uniform_source, [5],
                       stream(0, "m"), clock, extra_t_sim=2.5)
        assert res.t_sim == pytest.approx(7.5)


class TestPlainMC:
    def test_constant_evaluator(self):
        res = run_plain_mc(const_level(4.0), uniform_source, stream(5, "mc"),
                           SyntheticClock(), n=20)
        assert res.est_ens == 4.0
        assert res.se_ens == 0.0

    def test_bernoulli_estimate(self):
        level = Level("b", lambda z: (z, z), "exact_year")
        source = lambda rng: float(rng.integers(2))
        res = run_plain_mc(level, source, stream(6, "mc"), SyntheticClock(), n=10_000)
        assert abs(res.est_ens - 0.5) < 3 * 0.005

    def test_budget_mode_spends_budget(self):
        clock = SyntheticClock({"gen_year": 0.0, "exact_year": 0.1})
        res = run_plain_mc(const_level(1.0), uniform_source, stream(7, "mc"),
                           clock, t_budget=10.0)
        assert res.allocation[0] == pytest.approx(100, abs=1)
        assert res.est_ens == 1.0

    def test_budget_mode_keeps_pilot_samples(self):
        clock = SyntheticClock({"gen_year": 0.0, "exact_year": 1.0})
        res = run_plain_mc(const_level(1.0), uniform_source, stream(8, "mc"),
                           clock, t_budget=5.0, n_pilot=5)
        # pilot already exhausts the budget; its samples form the estimate
        assert res.allocation == [5]

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            run_plain_mc(const_level(1.0), uniform_source, stream(0, "mc"),
                         SyntheticClock(), n=1)
        with pytest.raises(ValueError):
            run_plain_mc(const_level(1.0), uniform_source, stream(0, "mc"),
                         SyntheticClock())


class TestSpeedPerformance:
    def test_direct_substitution(self):
        assert speed(2.0, 1.0, 1.0) == 4.0

    def test_mc_scaling_invariance(self):
        assert speed(2.0, 0.5, 2.0) == speed(2.0, 1.0, 1.0)

    def test_zero_variance_infinite(self):
        assert speed(1.0, 0.0, 1.0) == math.inf

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            speed(0.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            speed(1.0, 1.0, 0.0)

    def test_performance_examples(self):
        assert performance(3.0, 10.0, 10.0) == 0.0
        assert performance(3.0, 10.0, 0.0) == 30.0
        assert performance(2.0, 200.0, 100.0) == 200.0
        with pytest.raises(ValueError):
            performance(1.0, 5.0, 10.0)


class TestBreakEven:
    def test_equal_training_times(self):
        be = break_even(2.0, 50.0, 1.0, 50.0)
        assert be.status == "ok"
        assert be.t_star == pytest.approx(50.0)
        assert be.performance == pytest.approx(0.0)

    def test_reference_case(self):
        be = break_even(2.0, 100.0, 1.0, 0.0)
        assert be.t_star == 200.0
        assert be.performance == 200.0
        assert be.label() == "200"

    def test_dominated_invalid(self):
        be = break_even(0.5, 100.0, 1.0, 0.0)
        assert be.status == "invalid"
        assert be.label() == "Invalid"

    def test_equal_speeds_degenerate(self):
        assert break_even(1.0, 10.0, 1.0, 0.0).label() == "Degenerate"


class TestClocks:
    def test_wall_clock_advances(self):
        c = WallClock()
        t0 = c.now()
        c.charge("exact_year")  # no-op
        assert c.now() >= t0

    def test_synthetic_clock_rates(self):
        c = SyntheticClock({"exact_year": 0.5})
        c.charge("exact_year", 4)
        assert c.now() == 2.0
        with pytest.raises(KeyError):
            c.charge("nonsense")
