import numpy as np
import pytest

from adeqmc import active_learning as al
from adeqmc.active_learning import ALConfig, al_round, init_training, run_active_learning, train_random
from adeqmc.clock import SyntheticClock
from adeqmc.forest import ForestParams
from adeqmc.rng import stream

PARAMS = ForestParams(n_trees=5)


def clock():
    return SyntheticClock()


class TestConfig:
    def test_defaults(self):
        cfg = ALConfig()
        assert (cfg.n_init, cfg.pool_size, cfg.batch_size) == (730, 3650, 91)

    def test_validation(self):
        with pytest.raises(ValueError):
            ALConfig(batch_size=11, pool_size=10)
        with pytest.raises(ValueError):
            ALConfig(n_init=0)


class TestTrainRandom:
    def test_sizes_and_shapes(self, small_system):
        run = train_random(50, small_system, PARAMS, stream(1, "al"), clock())
        assert run.n_labeled == 50
        assert run.X.shape == (50, 24)
        assert run.lol.shape == run.ens.shape == (50,)
        assert run.n_rounds == 0

    def test_init_training_uses_n_init(self, small_system):
        run = init_training(ALConfig(n_init=30, pool_size=40, batch_size=5),
                            small_system, PARAMS, stream(1, "al"), clock())
        assert run.n_labeled == 30

    def test_deterministic(self, small_system):
        a = train_random(40, small_system, PARAMS, stream(2, "al"), clock())
        b = train_random(40, small_system, PARAMS, stream(2, "al"), clock())
        assert np.array_equal(a.X, b.X)
        assert np.array_equal(a.ens, b.ens)
        probe = a.X[:5]
        assert np.array_equal(a.forest_ens.predict_batch(probe),
                              b.forest_ens.predict_batch(probe))

    def test_training_time_accounting(self, small_system):
        c = SyntheticClock({"gen_day": 0.1, "label_day": 1.0, "fit_row": 0.01})
        run = train_random(20, small_system, PARAMS, stream(3, "al"), c)
        # generation + labeling + fitting two forests
        expected = 20 * 0.1 + 20 * 1.0 + 2 * 20 * 0.01
        assert run.t_train == pytest.approx(expected)

    def test_rejects_zero_days(self, small_system):
        with pytest.raises(ValueError):
            train_random(0, small_system, PARAMS, stream(0, "al"), clock())


class TestALRound:
    CFG = ALConfig(n_init=30, pool_size=60, batch_size=8)

    def _init(self, small_system, seed=4):
        return init_training(self.CFG, small_system, PARAMS, stream(seed, "al"), clock())

    def test_batch_grows_training_set(self, small_system):
        rng = stream(4, "al")
        run = init_training(self.CFG, small_system, PARAMS, rng, clock())
        nxt = al_round(run, self.CFG, small_system, PARAMS, rng, clock())
        assert nxt.n_labeled == run.n_labeled + self.CFG.batch_size
        assert nxt.n_rounds == 1
        assert np.array_equal(nxt.X[: run.n_labeled], run.X)

    def test_selected_scores_dominate_unselected(self, small_system):
        rng = stream(5, "al")
        run = init_training(self.CFG, small_system, PARAMS, rng, clock())
        nxt = al_round(run, self.CFG, small_system, PARAMS, rng, clock())
        entry = nxt.history[-1]
        assert entry["selected_std_min"] >= entry["unselected_std_max"]
        assert entry["pool_std_max"] >= entry["selected_std_min"]

    def test_constant_committee_selects_first_indices(self, small_system):
        class ZeroStdForest:
            def committee_std_batch(self, days):
                return np.zeros(np.asarray(days).shape[0])

        run = self._init(small_system)
        run.forest_ens = ZeroStdForest()
        nxt = al_round(run, self.CFG, small_system, PARAMS, stream(6, "al"), clock())
        assert nxt.history[-1]["selected_indices"] == list(range(self.CFG.batch_size))

    def test_history_bookkeeping(self, small_system):
        rng = stream(7, "al")
        run = init_training(self.CFG, small_system, PARAMS, rng, clock())
        nxt = al_round(run, self.CFG, small_system, PARAMS, rng, clock())
        assert [e["round"] for e in nxt.history] == [0, 1]
        assert nxt.history[-1]["n_labeled"] == nxt.n_labeled
        assert nxt.t_train > run.t_train


class TestRunActiveLearning:
    def test_checkpoints_and_sizes(self, small_system):
        cfg = ALConfig(n_init=20, pool_size=40, batch_size=5)
        runs = run_active_learning(cfg, 3, small_system, PARAMS,
                                   stream(8, "al"), clock(), checkpoints=[1, 3])
        assert sorted(runs) == [1, 3]
        assert runs[1].n_labeled == 25
        assert runs[3].n_labeled == 35
        assert runs[3].n_rounds == 3

    def test_deterministic_end_to_end(self, small_system):
        cfg = ALConfig(n_init=20, pool_size=40, batch_size=5)
        a = run_active_learning(cfg, 2, small_system, PARAMS, stream(9, "al"), clock())
        b = run_active_learning(cfg, 2, small_system, PARAMS, stream(9, "al"), clock())
        assert np.array_equal(a[2].X, b[2].X)
        for ea, eb in zip(a[2].history, b[2].history):
            assert ea.keys() == eb.keys()
            for key in ea:
                np.testing.assert_equal(ea[key], eb[key])
