"""Experiment configuration: YAML schema, defaults, validation.

The config file is the whole truth of an experiment; the only things
supplied outside it are CLI overrides for seed, output directory, thread
count and the deterministic-clock switch.  The top-level key
`adeqmc_config: 1` versions the schema.
"""

import copy

import yaml

from . import adequacy, scenario
from .clock import DEFAULT_RATES

CONFIG_VERSION = 1

DEFAULTS = {
    "seed": 1,
    "output_dir": "out",
    "system": {
        "thermal": {
            "capacities": {"count": 12, "capacity": 100.0},
            "availability": 0.9,
            "outage_model": "iid_hourly",
            "mttr_hours": 8.0,
        },
        "storage": {
            "units": {"count": 27, "power": 10.0, "energy": 20.0},
            "charge_efficiency": 1.0,
            "initial_soc_fraction": 1.0,
        },
        "profiles": {
            "source": "synthetic",
            "csv_dir": None,
            "n_wind": 30,
            "n_demand": 10,
            "synth": {},
        },
    },
    "surrogate": {
        "n_trees": 100,
        "max_depth": None,
        "min_samples_leaf": 1,
        "features_per_split": 8,
        "bootstrap": True,
    },
    "active_learning": {
        "n_init": 730,
        "pool_size": 3650,
        "batch_size": 91,
    },
    "variants": {
        "al_rounds": [5, 10, 20],
        "random_sizes": [3285, 7300, 14600],
    },
    "evaluation": {
        "daily_test_size": 100000,
        "yearly_test_size": 1000,
    },
    "mlmc": {
        "t_sim": 2004.0,
        "n_pilot": 200,
        "primary_metric": "ens",
    },
    "repetitions": 10,
    "clock": {
        "mode": "synthetic",
        "rates": dict(DEFAULT_RATES),
    },
}


class ConfigError(Exception):
    """Raised with the full list of violations found in a config file."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def _merge(defaults, override, path, errors):
    out = copy.deepcopy(defaults)
    for key, value in override.items():
        here = f"{path}.{key}" if path else key
        if key not in defaults:
            errors.append(f"{here}: unknown key")
            continue
        if isinstance(defaults[key], dict) and not isinstance(value, dict):
            # shorthand forms (e.g. an explicit capacities list) pass through
            out[key] = value
        elif isinstance(defaults[key], dict) and isinstance(value, dict):
            out[key] = _merge(defaults[key], value, here, errors)
        else:
            out[key] = value
    return out


def _require_pos_int(cfg, path, errors, minimum=1):
    node = cfg
    for part in path.split("."):
        node = node[part]
    if not isinstance(node, int) or isinstance(node, bool) or node < minimum:
        errors.append(f"{path}: must be an integer >= {minimum} (got {node!r})")


def _validate_semantics(cfg, errors):
    sysnode = cfg["system"]
    thermal = sysnode["thermal"]
    caps = thermal["capacities"]
    if isinstance(caps, dict):
        if caps.get("count", 0) < 1 or caps.get("capacity", 0.0) <= 0:
            errors.append("system.thermal.capacities: count >= 1 and capacity > 0 required")
    elif isinstance(caps, list):
        if not caps or any(not isinstance(c, (int, float)) or c <= 0 for c in caps):
            errors.append("system.thermal.capacities: non-empty list of positive MW values")
    else:
        errors.append("system.thermal.capacities: expected a list or {count, capacity}")
    if not 0.0 < thermal["availability"] <= 1.0:
        errors.append("system.thermal.availability: must be in (0, 1]")
    if thermal["outage_model"] not in ("iid_hourly", "two_state_markov"):
        errors.append("system.thermal.outage_model: must be iid_hourly or two_state_markov")
    if thermal["outage_model"] == "two_state_markov" and thermal["mttr_hours"] < 1:
        errors.append("system.thermal.mttr_hours: must be >= 1")

    storage = sysnode["storage"]
    units = storage["units"]
    if isinstance(units, dict):
        if units.get("count", 0) < 0 or units.get("power", -1) < 0 or units.get("energy", -1) < 0:
            errors.append("system.storage.units: count/power/energy must be non-negative")
    elif isinstance(units, list):
        for i, u in enumerate(units):
            if not isinstance(u, dict) or u.get("power", -1) < 0 or u.get("energy", -1) < 0:
                errors.append(f"system.storage.units[{i}]: need non-negative power and energy")
    else:
        errors.append("system.storage.units: expected a list or {count, power, energy}")
    if not 0.0 < storage["charge_efficiency"] <= 1.0:
        errors.append("system.storage.charge_efficiency: must be in (0, 1]")
    if not 0.0 <= storage["initial_soc_fraction"] <= 1.0:
        errors.append("system.storage.initial_soc_fraction: must be in [0, 1]")

    profiles = sysnode["profiles"]
    if profiles["source"] not in ("synthetic", "csv"):
        errors.append("system.profiles.source: must be synthetic or csv")
    if profiles["source"] == "csv" and not profiles["csv_dir"]:
        errors.append("system.profiles.csv_dir: required when source is csv")
    if profiles["source"] == "synthetic":
        _require_pos_int(cfg, "system.profiles.n_wind", errors)
        _require_pos_int(cfg, "system.profiles.n_demand", errors)
        unknown = set(profiles.get("synth") or {}) - {
            f for f in scenario.SynthParams.__dataclass_fields__
        }
        if unknown:
            errors.append(f"system.profiles.synth: unknown parameters {sorted(unknown)}")

    for path in ("surrogate.n_trees", "surrogate.min_samples_leaf",
                 "surrogate.features_per_split",
                 "active_learning.n_init", "active_learning.pool_size",
                 "active_learning.batch_size",
                 "evaluation.daily_test_size", "evaluation.yearly_test_size",
                 "mlmc.n_pilot", "repetitions"):
        _require_pos_int(cfg, path, errors)
    if cfg["surrogate"]["max_depth"] is not None:
        _require_pos_int(cfg, "surrogate.max_depth", errors)
    al = cfg["active_learning"]
    if isinstance(al["batch_size"], int) and isinstance(al["pool_size"], int):
        if al["batch_size"] > al["pool_size"]:
            errors.append("active_learning.batch_size: must not exceed pool_size")

    variants = cfg["variants"]
    for key in ("al_rounds", "random_sizes"):
        vals = variants[key]
        if not isinstance(vals, list) or not vals or any(
            not isinstance(v, int) or v < 1 for v in vals
        ):
            errors.append(f"variants.{key}: must be a non-empty list of positive integers")
    if cfg["mlmc"]["t_sim"] <= 0:
        errors.append("mlmc.t_sim: budget must be > 0")
    if cfg["mlmc"]["primary_metric"] not in ("lol", "ens"):
        errors.append("mlmc.primary_metric: must be lol or ens")
    if cfg["repetitions"] is not None and not isinstance(cfg["repetitions"], int):
        errors.append("repetitions: must be an integer")
    clock = cfg["clock"]
    if clock["mode"] not in ("wall", "synthetic"):
        errors.append("clock.mode: must be wall or synthetic")
    if clock["mode"] == "synthetic":
        for kind, rate in clock["rates"].items():
            if kind not in DEFAULT_RATES:
                errors.append(f"clock.rates.{kind}: unknown charge kind")
            elif not isinstance(rate, (int, float)) or rate < 0:
                errors.append(f"clock.rates.{kind}: must be a non-negative number")
        # budget feasibility: pilot plus two pairs per level must fit
        rates = {**DEFAULT_RATES, **clock["rates"]}
        tau1 = rates["gen_year"] + rates["surrogate_year"]
        tau2 = rates["gen_year"] + rates["exact_year"] + rates["surrogate_year"]
        if isinstance(cfg["mlmc"]["n_pilot"], int):
            need = (cfg["mlmc"]["n_pilot"] + 2) * (tau1 + tau2)
            if cfg["mlmc"]["t_sim"] < need:
                errors.append(
                    "mlmc.t_sim: budget cannot cover the pilot plus a minimal "
                    f"two-level run (need >= {need:.3g}s at the configured rates)"
                )


def resolve(raw):
    """Merge a raw config dict with defaults and validate; raises ConfigError."""
    errors = []
    if not isinstance(raw, dict):
        raise ConfigError(["config root must be a mapping"])
    version = raw.pop("adeqmc_config", None)
    if version != CONFIG_VERSION:
        errors.append(f"adeqmc_config: expected version {CONFIG_VERSION} (got {version!r})")
    cfg = _merge(DEFAULTS, raw, "", errors)
    if not errors:
        _validate_semantics(cfg, errors)
    if errors:
        raise ConfigError(errors)
    return cfg


def load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    return resolve(raw or {})


def thermal_capacities(cfg):
    caps = cfg["system"]["thermal"]["capacities"]
    if isinstance(caps, dict):
        return [float(caps["capacity"])] * int(caps["count"])
    return [float(c) for c in caps]


def storage_units(cfg):
    units = cfg["system"]["storage"]["units"]
    if isinstance(units, dict):
        return [
            adequacy.StorageUnit(float(units["power"]), float(units["energy"]))
            for _ in range(int(units["count"]))
        ]
    return [adequacy.StorageUnit(float(u["power"]), float(u["energy"])) for u in units]
