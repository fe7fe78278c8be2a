"""Time accounting with an injectable clock.

Cost-sensitive code paths (labeling, training, Monte Carlo evaluation) time
themselves through a clock object.  `WallClock` measures real elapsed time;
`SyntheticClock` advances a virtual time by a fixed rate per charged
operation, which makes timing-dependent results (sample allocations, speed
metrics, report files) fully deterministic for CI.

Charge kinds used across the package:

    gen_year        generate one margin year
    gen_day         generate one daily margin trace
    exact_year      exact dispatch of one margin year
    surrogate_year  surrogate prediction for one margin year
    label_day       exact dispatch of one 24-hour trace
    fit_row         one training row when fitting one forest
    pool_score      committee scoring of one pool candidate
"""

import time


DEFAULT_RATES = {
    # Emulates a production-scale system where the exact simulator dominates.
    "gen_year": 0.002,
    "gen_day": 1e-5,
    "exact_year": 2.0,
    "surrogate_year": 0.002,
    "label_day": 0.006,
    "fit_row": 1e-5,
    "pool_score": 1e-6,
}


class WallClock:
    """Real elapsed time; charges are no-ops."""

    deterministic = False

    def now(self):
        return time.perf_counter()

    def charge(self, kind, units=1.0):
        pass


class SyntheticClock:
    """Virtual time advanced by rate[kind] * units per charge."""

    deterministic = True

    def __init__(self, rates=None):
        merged = dict(DEFAULT_RATES)
        if rates:
            merged.update(rates)
        self.rates = merged
        self._t = 0.0

    def now(self):
        return self._t

    def charge(self, kind, units=1.0):
        try:
            rate = self.rates[kind]
        except KeyError:
            raise KeyError(f"no synthetic rate configured for charge kind '{kind}'")
        self._t += rate * units


def make_clock(mode, rates=None):
    if mode == "wall":
        return WallClock()
    if mode == "synthetic":
        return SyntheticClock(rates)
    raise ValueError(f"unknown clock mode '{mode}' (expected 'wall' or 'synthetic')")
