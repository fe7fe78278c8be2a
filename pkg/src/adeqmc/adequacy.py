"""Exact adequacy model: storage dispatch, yearly evaluation, daily labeling.

The dispatch rule serves the maximal feasible energy in every shortfall
hour, balancing units by time-to-empty (discharge from the fullest-duration
units down to a common level; recharge the shortest-duration units up).
`brute_force_min_ens` provides an exhaustive discretized optimum used in
tests to validate that the greedy rule attains the minimum ENS.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .scenario import HOURS_PER_DAY, HOURS_PER_YEAR

# residual shortfall below this threshold does not count as a loss-of-load
# event (suppresses floating-point phantom events)
LOL_EPS = 1e-6


@dataclass
class StorageUnit:
    """One storage unit; power is a symmetric charge/discharge limit, MW."""

    power: float
    energy_cap: float

    def __post_init__(self):
        if self.power < 0:
            raise ValueError("power must be >= 0")
        if self.energy_cap < 0:
            raise ValueError("energy_cap must be >= 0")


@dataclass
class StorageFleet:
    units: list
    charge_efficiency: float = 1.0
    initial_soc_fraction: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.charge_efficiency <= 1.0:
            raise ValueError("charge_efficiency must be in (0, 1]")
        if not 0.0 <= self.initial_soc_fraction <= 1.0:
            raise ValueError("initial_soc_fraction must be in [0, 1]")
        self._power = np.array([u.power for u in self.units], dtype=np.float64)
        self._cap = np.array([u.energy_cap for u in self.units], dtype=np.float64)

    @property
    def n_units(self):
        return len(self.units)

    @property
    def power_array(self):
        return self._power

    @property
    def cap_array(self):
        return self._cap

    def initial_soc(self):
        return self.initial_soc_fraction * self._cap


def empty_fleet():
    """A fleet with no storage (dispatch degenerates to counting shortfalls)."""
    return StorageFleet(units=[])


@dataclass
class AdequacyOutcome:
    """Loss-of-load hours and energy not served for one trace."""

    lol: int
    ens: float

    def __post_init__(self):
        if self.lol < 0 or self.ens < 0:
            raise ValueError("lol and ens must be non-negative")


def dispatch_trace(margin, fleet, initial_soc=None):
    """Dispatch storage over an hourly margin trace.

    Returns (AdequacyOutcome, final per-unit soc).  Deterministic; the soc
    state is threaded explicitly and never shared.
    """
    margin = np.asarray(margin, dtype=np.float64)
    if margin.ndim != 1:
        raise ValueError("margin must be a 1-D trace")
    if np.any(np.isnan(margin)):
        raise ValueError("margin trace contains NaN")
    if initial_soc is None:
        soc0 = fleet.initial_soc()
    else:
        soc0 = np.asarray(initial_soc, dtype=np.float64)
        if soc0.shape != fleet.cap_array.shape:
            raise ValueError("initial_soc length does not match fleet size")
        if np.any(soc0 < -1e-12) or np.any(soc0 > fleet.cap_array + 1e-12):
            raise ValueError("initial_soc outside [0, energy_cap]")
        soc0 = np.clip(soc0, 0.0, fleet.cap_array)
    if fleet.n_units == 0:
        shortfall = np.maximum(0.0, -margin)
        lol = int(np.sum(shortfall > LOL_EPS))
        return AdequacyOutcome(lol=lol, ens=float(shortfall.sum())), soc0
    lol, ens, soc = _kernels.dispatch(
        margin, fleet.power_array, fleet.cap_array, soc0,
        fleet.charge_efficiency, LOL_EPS,
    )
    return AdequacyOutcome(lol=int(lol), ens=float(ens)), soc


def evaluate_exact_year(margin, fleet):
    """Yearly LOL [h/y] and ENS [MWh/y] for an 8760-hour margin trace."""
    margin = np.asarray(margin, dtype=np.float64)
    if margin.shape != (HOURS_PER_YEAR,):
        raise ValueError(f"expected a {HOURS_PER_YEAR}-hour trace")
    outcome, _ = dispatch_trace(margin, fleet)
    return outcome


def label_day(day, fleet):
    """Daily LOL [h/day] and ENS [MWh/day]; soc starts at the configured
    initial fraction (default full) at day start."""
    day = np.asarray(day, dtype=np.float64)
    if day.shape != (HOURS_PER_DAY,):
        raise ValueError(f"expected a {HOURS_PER_DAY}-hour trace")
    outcome, _ = dispatch_trace(day, fleet)
    return outcome


def label_days(days, fleet):
    """Label a (n, 24) batch of daily traces; returns (lol, ens) arrays."""
    days = np.asarray(days, dtype=np.float64)
    n = days.shape[0]
    lol = np.empty(n)
    ens = np.empty(n)
    for i in range(n):
        out = label_day(days[i], fleet)
        lol[i] = out.lol
        ens[i] = out.ens
    return lol, ens


def brute_force_min_ens(margin, fleet, initial_soc=None, grid_step=0.25,
                        max_work=20_000_000):
    """Minimum total ENS over all feasible dispatch schedules discretized on
    grid_step, by dynamic programming over gridded soc states.  Test oracle
    only; raises on instances beyond the guard rails.
    """
    margin = np.asarray(margin, dtype=np.float64)
    n_units = fleet.n_units
    if n_units > 3 or margin.size > 8:
        raise ValueError("brute force limited to <= 3 units and <= 8 hours")
    if fleet.charge_efficiency != 1.0:
        raise ValueError("brute force oracle assumes charge_efficiency == 1")
    power = fleet.power_array
    cap = fleet.cap_array
    soc0 = fleet.initial_soc() if initial_soc is None else np.asarray(initial_soc, float)

    def to_grid(x, what):
        g = x / grid_step
        if abs(g - round(g)) > 1e-9:
            raise ValueError(f"{what} must be a multiple of grid_step")
        return int(round(g))

    p_idx = [to_grid(p, "power") for p in power]
    c_idx = [to_grid(c, "energy_cap") for c in cap]
    s_idx = tuple(to_grid(s, "initial soc") for s in soc0)

    states = {s_idx: 0.0}
    work = 0
    for z in margin:
        new_states = {}
        if z < 0.0:
            need = -z
            d_cap = math.ceil(need / grid_step - 1e-9)
            for state, ens in states.items():
                ranges = [range(min(p_idx[i], state[i], d_cap) + 1) for i in range(n_units)]
                for action in itertools.product(*ranges):
                    work += 1
                    total = sum(action)
                    if total > d_cap:
                        continue
                    served = min(need, total * grid_step)
                    nxt = tuple(state[i] - action[i] for i in range(n_units))
                    cand = ens + (need - served)
                    prev = new_states.get(nxt)
                    if prev is None or cand < prev:
                        new_states[nxt] = cand
        elif z > 0.0:
            ch_cap = math.floor(z / grid_step + 1e-9)
            for state, ens in states.items():
                ranges = [
                    range(min(p_idx[i], c_idx[i] - state[i], ch_cap) + 1)
                    for i in range(n_units)
                ]
                for action in itertools.product(*ranges):
                    work += 1
                    if sum(action) > ch_cap:
                        continue
                    nxt = tuple(state[i] + action[i] for i in range(n_units))
                    prev = new_states.get(nxt)
                    if prev is None or ens < prev:
                        new_states[nxt] = ens
        else:
            new_states = states
        if work > max_work:
            raise ValueError("brute force instance too large")
        states = new_states
    return min(states.values())
