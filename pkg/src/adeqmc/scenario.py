"""Scenario generation: wind/demand profiles, thermal outages, margin traces.

A scenario is a one-year hourly generation margin trace

    z[t] = available thermal capacity[t] + wind[t] - demand[t]

with wind and demand years drawn uniformly (and independently) from a
profile library, and thermal availability sampled per generator.
"""

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import _kernels

HOURS_PER_YEAR = 8760
HOURS_PER_DAY = 24
DAYS_PER_YEAR = 365


def _check_profile_matrix(arr, name):
    if arr.ndim != 2 or arr.shape[1] != HOURS_PER_YEAR:
        raise ValueError(f"{name} profiles must have {HOURS_PER_YEAR} hourly values per year")
    if arr.shape[0] < 1:
        raise ValueError(f"need at least one {name} profile")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} profiles contain non-finite values")
    if np.any(arr < 0):
        raise ValueError(f"{name} profiles must be non-negative")


@dataclass
class ProfileLibrary:
    """Yearly wind and demand profiles, MW, one row per year."""

    wind_years: np.ndarray
    demand_years: np.ndarray

    def __post_init__(self):
        self.wind_years = np.asarray(self.wind_years, dtype=np.float64)
        self.demand_years = np.asarray(self.demand_years, dtype=np.float64)
        _check_profile_matrix(self.wind_years, "wind")
        _check_profile_matrix(self.demand_years, "demand")

    @property
    def n_wind(self):
        return self.wind_years.shape[0]

    @property
    def n_demand(self):
        return self.demand_years.shape[0]


@dataclass
class ThermalFleet:
    """Conventional generators with a common availability model."""

    capacities: np.ndarray
    availability: float = 0.9
    outage_model: str = "iid_hourly"  # or "two_state_markov"
    mttr_hours: float = 8.0

    def __post_init__(self):
        self.capacities = np.asarray(self.capacities, dtype=np.float64)
        if self.capacities.ndim != 1 or self.capacities.size == 0:
            raise ValueError("capacities must be a non-empty 1-D sequence")
        if np.any(self.capacities <= 0):
            raise ValueError("capacities must be positive")
        if not 0.0 < self.availability <= 1.0:
            raise ValueError("availability must be in (0, 1]")
        if self.outage_model not in ("iid_hourly", "two_state_markov"):
            raise ValueError(f"unknown outage model '{self.outage_model}'")
        if self.outage_model == "two_state_markov" and self.mttr_hours < 1.0:
            raise ValueError("mttr_hours must be >= 1")

    @property
    def total_capacity(self):
        return float(self.capacities.sum())


@dataclass
class SynthParams:
    """Closed-form generators for the bundled synthetic profiles.

    Wind year:   w[t] = max(0, wind_mean * (1 + wind_seasonal_amp * cos(2*pi*t/8760))
                              + wind_noise * n[t])
    Demand year: d[t] = max(0, demand_mean * (1 + demand_seasonal_amp * cos(2*pi*t/8760)
                                                + demand_diurnal_amp * cos(2*pi*(h-18)/24)
                                                - demand_weekend_drop * [weekend])
                              + demand_noise * m[t])

    where h is the hour of day, and n, m are per-year AR(1) series
    x[t] = ar_coeff * x[t-1] + sqrt(1-ar_coeff^2) * eps[t] with standard normal
    eps.  All year-to-year variation enters through the noise terms, so zero
    noise amplitudes reproduce the deterministic base patterns exactly.
    """

    wind_mean: float = 300.0
    wind_seasonal_amp: float = 0.5
    wind_noise: float = 150.0
    demand_mean: float = 960.0
    demand_seasonal_amp: float = 0.12
    demand_diurnal_amp: float = 0.15
    demand_weekend_drop: float = 0.05
    demand_noise: float = 40.0
    ar_coeff: float = 0.95


def _ar1(rng, n, rho):
    eps = rng.standard_normal(n)
    out = np.empty(n)
    x = eps[0]
    scale = math.sqrt(1.0 - rho * rho)
    out[0] = x
    for t in range(1, n):
        x = rho * x + scale * eps[t]
        out[t] = x
    return out


def _wind_base(p):
    t = np.arange(HOURS_PER_YEAR)
    return p.wind_mean * (1.0 + p.wind_seasonal_amp * np.cos(2.0 * np.pi * t / HOURS_PER_YEAR))


def _demand_base(p):
    t = np.arange(HOURS_PER_YEAR)
    hour = t % HOURS_PER_DAY
    day = t // HOURS_PER_DAY
    weekend = ((day % 7) >= 5).astype(np.float64)
    shape = (
        1.0
        + p.demand_seasonal_amp * np.cos(2.0 * np.pi * t / HOURS_PER_YEAR)
        + p.demand_diurnal_amp * np.cos(2.0 * np.pi * (hour - 18) / HOURS_PER_DAY)
        - p.demand_weekend_drop * weekend
    )
    return p.demand_mean * shape


def synth_profiles(n_wind, n_demand, seed_stream, params=None):
    """Generate a deterministic synthetic ProfileLibrary.

    seed_stream is a numpy Generator (see rng.stream); identical streams
    give bit-identical libraries.
    """
    if n_wind < 1 or n_demand < 1:
        raise ValueError("profile counts must be >= 1")
    p = params or SynthParams()
    wind_base = _wind_base(p)
    demand_base = _demand_base(p)
    wind = np.empty((n_wind, HOURS_PER_YEAR))
    for y in range(n_wind):
        noise = _ar1(seed_stream, HOURS_PER_YEAR, p.ar_coeff) if p.wind_noise != 0 else 0.0
        wind[y] = np.maximum(0.0, wind_base + p.wind_noise * noise)
    demand = np.empty((n_demand, HOURS_PER_YEAR))
    for y in range(n_demand):
        noise = _ar1(seed_stream, HOURS_PER_YEAR, p.ar_coeff) if p.demand_noise != 0 else 0.0
        demand[y] = np.maximum(0.0, demand_base + p.demand_noise * noise)
    return ProfileLibrary(wind_years=wind, demand_years=demand)


def save_profiles(library, directory):
    """Write wind.csv and demand.csv (one column per year, 8760 rows).

    Values are written with repr-precision so load_profiles round-trips
    bit-exactly.
    """
    os.makedirs(directory, exist_ok=True)
    for name, arr in (("wind", library.wind_years), ("demand", library.demand_years)):
        path = os.path.join(directory, f"{name}.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(f"year_{i + 1}" for i in range(arr.shape[0])) + "\n")
            for row in arr.T:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _load_profile_csv(path, name):
    if not os.path.exists(path):
        raise FileNotFoundError(f"missing {name} profile file: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.strip():
            raise ValueError(f"{path}: empty or missing header row")
        n_cols = len(header.rstrip("\n").split(","))
        rows = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split(",")
            if len(parts) != n_cols:
                raise ValueError(
                    f"{path}:{lineno}: expected {n_cols} columns, found {len(parts)}"
                )
            try:
                rows.append([float(v) for v in parts])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed numeric value")
    arr = np.asarray(rows, dtype=np.float64)
    if arr.shape[0] != HOURS_PER_YEAR:
        raise ValueError(
            f"{path}: profile length mismatch (expected {HOURS_PER_YEAR} rows, got {arr.shape[0]})"
        )
    if np.any(arr < 0):
        raise ValueError(f"{path}: negative values are not allowed")
    return arr.T.copy()


def load_profiles(directory):
    """Load a ProfileLibrary from wind.csv + demand.csv in `directory`."""
    wind = _load_profile_csv(os.path.join(directory, "wind.csv"), "wind")
    demand = _load_profile_csv(os.path.join(directory, "demand.csv"), "demand")
    return ProfileLibrary(wind_years=wind, demand_years=demand)


def sample_available_capacity(fleet, rng, n_hours=HOURS_PER_YEAR):
    """Sample the total available thermal capacity trace, MW."""
    n_gen = fleet.capacities.size
    if fleet.availability == 1.0:
        return np.full(n_hours, fleet.total_capacity)
    if fleet.outage_model == "iid_hourly":
        up = rng.random((n_gen, n_hours)) < fleet.availability
        return fleet.capacities @ up
    # two-state Markov chain with stationary availability equal to the
    # configured value: p_repair = 1/mttr, p_fail = p_repair*(1-a)/a
    p_repair = 1.0 / fleet.mttr_hours
    p_fail = p_repair * (1.0 - fleet.availability) / fleet.availability
    u0 = rng.random(n_gen)
    u = rng.random((n_gen, n_hours))
    return _kernels.markov_capacity(
        fleet.capacities, u0, u, fleet.availability, p_fail, p_repair
    )


def sample_margin_year(fleet, library, rng):
    """Draw one margin year: available capacity + wind year - demand year."""
    avail = sample_available_capacity(fleet, rng)
    iw = rng.integers(library.n_wind)
    idm = rng.integers(library.n_demand)
    return avail + library.wind_years[iw] - library.demand_years[idm]


def split_days(trace):
    """Split an 8760-hour trace into a (365, 24) array of daily traces."""
    trace = np.asarray(trace, dtype=np.float64)
    if trace.shape != (HOURS_PER_YEAR,):
        raise ValueError(f"expected a trace of length {HOURS_PER_YEAR}, got {trace.shape}")
    return trace.reshape(DAYS_PER_YEAR, HOURS_PER_DAY)


def sample_margin_days(fleet, library, n_days, rng):
    """Draw n_days daily margin traces, each a uniformly chosen day of a
    sampled margin year.  Years are sampled in bulk and their days pooled, so
    the cost is ~n_days/365 year simulations."""
    if n_days < 1:
        raise ValueError("n_days must be >= 1")
    n_years = math.ceil(n_days / DAYS_PER_YEAR)
    days = np.empty((n_years * DAYS_PER_YEAR, HOURS_PER_DAY))
    for y in range(n_years):
        days[y * DAYS_PER_YEAR : (y + 1) * DAYS_PER_YEAR] = split_days(
            sample_margin_year(fleet, library, rng)
        )
    pick = rng.permutation(n_years * DAYS_PER_YEAR)[:n_days]
    return days[pick]
