"""Pool-based vote-by-committee training of the daily surrogates.

Each round draws a temporary pool of unlabeled daily traces, scores them by
the committee disagreement (per-tree standard deviation) of the ENS forest,
labels the most-disputed batch with the exact model, and refits both
forests from scratch.  Unselected pool items are discarded.  Training time
(generation + labeling + fitting) is accounted through the injected clock.
"""

from dataclasses import dataclass, field

import numpy as np

from . import forest as forest_mod


@dataclass
class ALConfig:
    n_init: int = 730
    pool_size: int = 3650
    batch_size: int = 91

    def __post_init__(self):
        if min(self.n_init, self.pool_size, self.batch_size) < 1:
            raise ValueError("ALConfig counts must be positive")
        if self.batch_size > self.pool_size:
            raise ValueError("batch_size must not exceed pool_size")


@dataclass
class TrainingRun:
    """Labeled training set plus the forests fitted on it."""

    X: np.ndarray
    lol: np.ndarray
    ens: np.ndarray
    forest_lol: forest_mod.Forest
    forest_ens: forest_mod.Forest
    t_train: float
    n_rounds: int = 0
    history: list = field(default_factory=list)

    @property
    def n_labeled(self):
        return self.X.shape[0]


def _fit_pair(X, lol, ens, params, rng, clock):
    f_lol = forest_mod.fit(X, lol, params, rng)
    f_ens = forest_mod.fit(X, ens, params, rng)
    clock.charge("fit_row", 2 * X.shape[0])
    return f_lol, f_ens


def train_random(n_days, system, params, rng, clock):
    """Label n_days randomly sampled daily traces and fit both forests."""
    if n_days < 1:
        raise ValueError("n_days must be >= 1")
    t0 = clock.now()
    X = system.sample_days(n_days, rng)
    clock.charge("gen_day", n_days)
    lol, ens = system.label_days(X)
    clock.charge("label_day", n_days)
    f_lol, f_ens = _fit_pair(X, lol, ens, params, rng, clock)
    return TrainingRun(
        X=X, lol=lol, ens=ens, forest_lol=f_lol, forest_ens=f_ens,
        t_train=clock.now() - t0,
        history=[{
            "round": 0,
            "n_labeled": n_days,
            "t_train": clock.now() - t0,
            "pool_std_max": float("nan"),
            "pool_std_median": float("nan"),
            "selected_std_min": float("nan"),
        }],
    )


def init_training(config, system, params, rng, clock):
    """Random initial training set of config.n_init days (AL round 0)."""
    return train_random(config.n_init, system, params, rng, clock)


def al_round(run, config, system, params, rng, clock):
    """One vote-by-committee round; returns a new TrainingRun.

    Pool candidates are scored with the ENS forest committee std; ties are
    resolved toward lower pool index.
    """
    t0 = clock.now()
    pool = system.sample_days(config.pool_size, rng)
    clock.charge("gen_day", config.pool_size)
    stds = run.forest_ens.committee_std_batch(pool)
    clock.charge("pool_score", config.pool_size)
    # stable sort on -std keeps lower pool indices first among ties
    order = np.argsort(-stds, kind="stable")
    selected = order[: config.batch_size]
    new_lol, new_ens = system.label_days(pool[selected])
    clock.charge("label_day", config.batch_size)
    X = np.vstack([run.X, pool[selected]])
    lol = np.concatenate([run.lol, new_lol])
    ens = np.concatenate([run.ens, new_ens])
    f_lol, f_ens = _fit_pair(X, lol, ens, params, rng, clock)
    t_train = run.t_train + (clock.now() - t0)
    entry = {
        "round": run.n_rounds + 1,
        "n_labeled": X.shape[0],
        "t_train": t_train,
        "pool_std_max": float(stds.max()),
        "pool_std_median": float(np.median(stds)),
        "selected_std_min": float(stds[selected].min()),
        "unselected_std_max": (
            float(stds[order[config.batch_size :]].max())
            if config.batch_size < config.pool_size else float("nan")
        ),
        "selected_indices": selected.tolist(),
    }
    return TrainingRun(
        X=X, lol=lol, ens=ens, forest_lol=f_lol, forest_ens=f_ens,
        t_train=t_train, n_rounds=run.n_rounds + 1,
        history=run.history + [entry],
    )


def run_active_learning(config, n_rounds, system, params, rng, clock,
                        checkpoints=None):
    """Run init + n_rounds AL rounds; returns {round: TrainingRun} for each
    requested checkpoint round (always including n_rounds)."""
    wanted = set(checkpoints or [])
    wanted.add(n_rounds)
    run = init_training(config, system, params, rng, clock)
    out = {}
    if 0 in wanted:
        out[0] = run
    for k in range(1, n_rounds + 1):
        run = al_round(run, config, system, params, rng, clock)
        if k in wanted:
            out[k] = run
    return out
