"""Multilevel Monte Carlo engine with speed and break-even analytics.

The estimator uses a hierarchy f_1, ..., f_L (with f_0 = 0) and sums the
per-level means of Y_l = f_l(z) - f_{l-1}(z), each level sampled
independently:

    q_hat = sum_l (1/N_l) sum_i [f_l(z_i) - f_{l-1}(z_i)]

With per-pair cost tau_l and Y_l standard deviation sigma_l, the optimal
allocation for a time budget puts N_l proportional to sigma_l/sqrt(tau_l),
giving estimator variance (sum_l sigma_l sqrt(tau_l))^2 / t_sim.

The speed of an estimator is s = q^2 / (t_sim * sigma_Q^2); performance at
total time t with training cost t_train is 1/c^2 = s * (t - t_train).
"""

import math
from dataclasses import dataclass, field

import numpy as np

N_MIN = 2  # minimum samples per level (variance needs >= 2)

Z_95 = 1.96  # normal 95% interval half-width multiplier


@dataclass
class Level:
    """One model in the hierarchy; evaluate(margin) -> (lol, ens)."""

    name: str
    evaluate: callable
    cost_kind: str


@dataclass
class LevelStats:
    """Sample statistics of Y_l (per metric) and per-pair cost."""

    name: str
    mean_lol: float
    mean_ens: float
    std_lol: float
    std_ens: float
    tau: float
    n: int

    def sigma(self, metric):
        return self.std_ens if metric == "ens" else self.std_lol


@dataclass
class MLMCResult:
    est_lol: float
    est_ens: float
    se_lol: float
    se_ens: float
    level_stats: list
    allocation: list
    t_sim: float

    def ci_halfwidth(self, metric):
        se = self.se_ens if metric == "ens" else self.se_lol
        return Z_95 * se


def _eval_pair(levels, l, z, clock):
    """Y_l components for one scenario; f_0 is the constant zero."""
    hi = levels[l]
    lol_hi, ens_hi = hi.evaluate(z)
    clock.charge(hi.cost_kind)
    if l == 0:
        return lol_hi, ens_hi
    lo = levels[l - 1]
    lol_lo, ens_lo = lo.evaluate(z)
    clock.charge(lo.cost_kind)
    return lol_hi - lol_lo, ens_hi - ens_lo


def _sample_level(levels, l, n, source, rng, clock):
    y_lol = np.empty(n)
    y_ens = np.empty(n)
    t0 = clock.now()
    for i in range(n):
        z = source(rng)
        clock.charge("gen_year")
        y_lol[i], y_ens[i] = _eval_pair(levels, l, z, clock)
    if not (np.all(np.isfinite(y_lol)) and np.all(np.isfinite(y_ens))):
        raise ValueError(f"non-finite evaluator output at level {levels[l].name}")
    tau = (clock.now() - t0) / n
    return y_lol, y_ens, tau


def pilot(levels, source, n_pilot, rng, clock):
    """Estimate per-level Y_l statistics and pair costs from n_pilot
    independent scenarios per level."""
    if n_pilot < N_MIN:
        raise ValueError(f"n_pilot must be >= {N_MIN}")
    stats = []
    for l, level in enumerate(levels):
        y_lol, y_ens, tau = _sample_level(levels, l, n_pilot, source, rng, clock)
        stats.append(LevelStats(
            name=level.name,
            mean_lol=float(y_lol.mean()),
            mean_ens=float(y_ens.mean()),
            std_lol=float(y_lol.std(ddof=1)),
            std_ens=float(y_ens.std(ddof=1)),
            tau=tau,
            n=n_pilot,
        ))
    return stats


def allocate_samples(stats, t_sim, primary_metric="ens"):
    """Optimal N_l for a simulation budget: N_l ~ sigma_l / sqrt(tau_l),
    scaled to spend t_sim, floored at N_MIN; leftover budget goes to the
    level with the largest marginal variance reduction per second."""
    taus = np.array([s.tau for s in stats])
    sigmas = np.array([s.sigma(primary_metric) for s in stats])
    if np.any(taus <= 0):
        raise ValueError("all level costs must be positive")
    if t_sim < N_MIN * taus.sum():
        raise ValueError(
            f"budget {t_sim:.3g}s cannot afford {N_MIN} samples at every level"
        )
    denom = float(sigmas @ np.sqrt(taus))
    alloc = []
    for sigma, tau in zip(sigmas, taus):
        if denom > 0 and sigma > 0:
            n = int(t_sim * sigma / (math.sqrt(tau) * denom))
        else:
            n = 0
        alloc.append(max(N_MIN, n))
    alloc = np.array(alloc, dtype=np.int64)
    leftover = t_sim - float(alloc @ taus)
    slack = 1e-9 * (1.0 + abs(t_sim))  # tolerate float error in the budget
    while True:
        # marginal predicted-variance reduction per second of adding one sample
        gains = sigmas**2 / (alloc * (alloc + 1.0)) / taus
        gains[taus > leftover + slack] = -1.0
        best = int(np.argmax(gains))
        if gains[best] <= 0:
            break
        alloc[best] += 1
        leftover -= taus[best]
    return alloc.tolist()


def predicted_variance(stats, allocation, metric="ens"):
    return float(sum(s.sigma(metric) ** 2 / n for s, n in zip(stats, allocation)))


def run_mlmc(levels, source, allocation, rng, clock, extra_t_sim=0.0):
    """Run the MLMC estimator with a fixed per-level allocation.

    extra_t_sim adds already-spent simulation time (e.g. the pilot) to the
    reported t_sim.
    """
    if len(allocation) != len(levels):
        raise ValueError("allocation length must match the level count")
    t0 = clock.now()
    est_lol = est_ens = 0.0
    var_lol = var_ens = 0.0
    realized = []
    for l, n in enumerate(allocation):
        if n < N_MIN:
            raise ValueError(f"need at least {N_MIN} samples at level {levels[l].name}")
        t_l0 = clock.now()
        y_lol, y_ens, tau = _sample_level(levels, l, n, source, rng, clock)
        est_lol += y_lol.mean()
        est_ens += y_ens.mean()
        var_lol += y_lol.var(ddof=1) / n
        var_ens += y_ens.var(ddof=1) / n
        realized.append(LevelStats(
            name=levels[l].name,
            mean_lol=float(y_lol.mean()),
            mean_ens=float(y_ens.mean()),
            std_lol=float(y_lol.std(ddof=1)),
            std_ens=float(y_ens.std(ddof=1)),
            tau=tau,
            n=n,
        ))
    return MLMCResult(
        est_lol=float(est_lol),
        est_ens=float(est_ens),
        se_lol=math.sqrt(var_lol),
        se_ens=math.sqrt(var_ens),
        level_stats=realized,
        allocation=list(allocation),
        t_sim=(clock.now() - t0) + extra_t_sim,
    )


def run_plain_mc(level, source, rng, clock, n=None, t_budget=None, n_pilot=20):
    """Single-level Monte Carlo; either a fixed n or a time budget.

    Budget mode measures the per-sample cost on n_pilot initial samples and
    sizes the total run to spend t_budget; the pilot samples are kept in the
    estimate (they are iid with the rest) and their time counts in t_sim.
    """
    levels = [level]
    if n is None:
        if t_budget is None or t_budget <= 0:
            raise ValueError("give either n >= 2 or t_budget > 0")
        t0 = clock.now()
        y_lol0, y_ens0, tau = _sample_level(levels, 0, n_pilot, source, rng, clock)
        t_spent = clock.now() - t0
        n_extra = max(0, int((t_budget - t_spent) / tau))
        if n_extra > 0:
            y_lol1, y_ens1, _ = _sample_level(levels, 0, n_extra, source, rng, clock)
            y_lol = np.concatenate([y_lol0, y_lol1])
            y_ens = np.concatenate([y_ens0, y_ens1])
        else:
            y_lol, y_ens = y_lol0, y_ens0
        n_total = y_lol.size
        return MLMCResult(
            est_lol=float(y_lol.mean()),
            est_ens=float(y_ens.mean()),
            se_lol=float(y_lol.std(ddof=1)) / math.sqrt(n_total),
            se_ens=float(y_ens.std(ddof=1)) / math.sqrt(n_total),
            level_stats=[LevelStats(
                name=level.name,
                mean_lol=float(y_lol.mean()), mean_ens=float(y_ens.mean()),
                std_lol=float(y_lol.std(ddof=1)), std_ens=float(y_ens.std(ddof=1)),
                tau=tau, n=n_total,
            )],
            allocation=[n_total],
            t_sim=clock.now() - t0,
        )
    if n < N_MIN:
        raise ValueError(f"n must be >= {N_MIN}")
    return run_mlmc(levels, source, [n], rng, clock)


def speed(q, sigma2, t_sim):
    """Estimator speed s = q^2 / (t_sim * sigma_Q^2), dimensionless."""
    if q == 0:
        raise ValueError("speed is undefined for q == 0")
    if t_sim <= 0:
        raise ValueError("t_sim must be positive")
    if sigma2 == 0:
        return math.inf
    return q * q / (t_sim * sigma2)


def performance(s, t, t_train):
    """1/c^2 achieved at total time t: s * (t - t_train)."""
    if t < t_train:
        raise ValueError("total time is below the training time")
    return s * (t - t_train)


@dataclass
class BreakEven:
    """Crossing point where estimator a overtakes the simpler estimator b."""

    status: str  # "ok" | "invalid" | "degenerate"
    t_star: float = float("nan")
    performance: float = float("nan")

    def label(self):
        if self.status == "ok":
            return f"{self.performance:.4g}"
        return "Invalid" if self.status == "invalid" else "Degenerate"


def break_even(s_a, t_train_a, s_b, t_train_b):
    """Solve s_a*(t - t_train_a) = s_b*(t - t_train_b) for the time and
    performance at which a (more trained) overtakes b (simpler).

    If a is never faster (s_a <= s_b with at least as much training) the
    result is flagged Invalid; equal speeds are flagged Degenerate.
    """
    if s_a == s_b:
        return BreakEven(status="degenerate")
    if s_a < s_b:
        return BreakEven(status="invalid")
    t_star = (s_a * t_train_a - s_b * t_train_b) / (s_a - s_b)
    return BreakEven(status="ok", t_star=t_star,
                     performance=s_b * (t_star - t_train_b))
