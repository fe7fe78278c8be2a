"""Experiment orchestration: training sweeps, MLMC comparison, reports.

Produces the comparison table (exact model vs. AL-trained vs. random-trained
surrogate MLMC estimators, with speeds and break-even performances), the
per-round active-learning history, and accuracy sweeps by training size and
training time.  All outputs are plain CSV/JSON; plotting is out of scope.
"""

import concurrent.futures
import csv
import json
import math
import os
from dataclasses import asdict

import numpy as np

from . import active_learning as al
from . import config as config_mod
from . import forest as forest_mod
from . import mlmc, scenario
from .adequacy import StorageFleet
from .clock import make_clock
from .rng import stream
from .system import System

TABLE1_COLUMNS = [
    "estimator",
    "train_size_days",
    "train_time_s",
    "simulation_time_s",
    "lole_hpy",
    "lole_speed",
    "lole_break_even",
    "eens_mwhpy",
    "eens_speed",
    "eens_break_even",
]


def build_system(cfg, seed):
    thermal = scenario.ThermalFleet(
        capacities=config_mod.thermal_capacities(cfg),
        availability=cfg["system"]["thermal"]["availability"],
        outage_model=cfg["system"]["thermal"]["outage_model"],
        mttr_hours=cfg["system"]["thermal"]["mttr_hours"],
    )
    storage = StorageFleet(
        units=config_mod.storage_units(cfg),
        charge_efficiency=cfg["system"]["storage"]["charge_efficiency"],
        initial_soc_fraction=cfg["system"]["storage"]["initial_soc_fraction"],
    )
    prof = cfg["system"]["profiles"]
    if prof["source"] == "csv":
        profiles = scenario.load_profiles(prof["csv_dir"])
    else:
        params = scenario.SynthParams(**(prof.get("synth") or {}))
        profiles = scenario.synth_profiles(
            prof["n_wind"], prof["n_demand"], stream(seed, "profiles"), params
        )
    return System(thermal=thermal, storage=storage, profiles=profiles)


def forest_params(cfg):
    return forest_mod.ForestParams(**cfg["surrogate"])


def _clock_factory(cfg, deterministic_override=False):
    mode = "synthetic" if deterministic_override else cfg["clock"]["mode"]
    rates = cfg["clock"]["rates"]
    return lambda: make_clock(mode, rates)


def make_levels(system, run):
    """Two-level hierarchy: {surrogate, exact} on shared scenarios."""

    def surrogate_eval(z):
        est = forest_mod.predict_year(run.forest_lol, run.forest_ens, z)
        return est.lol, est.ens

    def exact_eval(z):
        out = system.exact_year(z)
        return float(out.lol), float(out.ens)

    return [
        mlmc.Level(name="surrogate", evaluate=surrogate_eval, cost_kind="surrogate_year"),
        mlmc.Level(name="exact", evaluate=exact_eval, cost_kind="exact_year"),
    ]


def exact_level(system):
    def exact_eval(z):
        out = system.exact_year(z)
        return float(out.lol), float(out.ens)

    return mlmc.Level(name="exact", evaluate=exact_eval, cost_kind="exact_year")


def _safe_speed(q, se, t_sim):
    if q == 0 or se == 0:
        return float("nan") if q == 0 else float("inf")
    return mlmc.speed(q, se * se, t_sim)


def _result_record(result):
    return {
        "est_lol": result.est_lol,
        "est_ens": result.est_ens,
        "ci_lol": result.ci_halfwidth("lol"),
        "ci_ens": result.ci_halfwidth("ens"),
        "t_sim": result.t_sim,
        "speed_lol": _safe_speed(result.est_lol, result.se_lol, result.t_sim),
        "speed_ens": _safe_speed(result.est_ens, result.se_ens, result.t_sim),
        "allocation": result.allocation,
        "levels": [asdict(s) for s in result.level_stats],
    }


def _mlmc_for_run(run, system, cfg, seed, rep, tag, clock_factory):
    """Pilot + allocate + run the two-level MLMC for one trained surrogate."""
    clock = clock_factory()
    levels = make_levels(system, run)
    t_sim = cfg["mlmc"]["t_sim"]
    t0 = clock.now()
    stats = mlmc.pilot(levels, system.sample_year, cfg["mlmc"]["n_pilot"],
                       stream(seed, "pilot-" + tag, rep), clock)
    t_pilot = clock.now() - t0
    alloc = mlmc.allocate_samples(stats, t_sim - t_pilot,
                                  primary_metric=cfg["mlmc"]["primary_metric"])
    result = mlmc.run_mlmc(levels, system.sample_year, alloc,
                           stream(seed, "mlmc-" + tag, rep), clock,
                           extra_t_sim=t_pilot)
    return _result_record(result)


def _evaluate_surrogate(run, test_sets):
    return forest_mod.surrogate_metrics(
        run.forest_lol, run.forest_ens,
        test_sets["daily_X"], test_sets["daily_lol"], test_sets["daily_ens"],
        test_sets["yearly_margins"], test_sets["yearly_lol"], test_sets["yearly_ens"],
    )


def build_test_sets(cfg, system, seed):
    ev = cfg["evaluation"]
    daily_X = system.sample_days(ev["daily_test_size"], stream(seed, "test-daily"))
    daily_lol, daily_ens = system.label_days(daily_X)
    n_year = ev["yearly_test_size"]
    margins = np.empty((n_year, scenario.HOURS_PER_YEAR))
    yearly_lol = np.empty(n_year)
    yearly_ens = np.empty(n_year)
    for i in range(n_year):
        margins[i] = system.sample_year(stream(seed, "test-yearly", i))
        out = system.exact_year(margins[i])
        yearly_lol[i] = out.lol
        yearly_ens[i] = out.ens
    return {
        "daily_X": daily_X,
        "daily_lol": daily_lol,
        "daily_ens": daily_ens,
        "yearly_margins": margins,
        "yearly_lol": yearly_lol,
        "yearly_ens": yearly_ens,
    }


def _run_repetition(rep, cfg, system, test_sets, seed, clock_factory):
    """All variants for one repetition; returns records keyed by variant."""
    params = forest_params(cfg)
    alcfg = al.ALConfig(**cfg["active_learning"])
    al_rounds = sorted(cfg["variants"]["al_rounds"])
    random_sizes = sorted(cfg["variants"]["random_sizes"])
    records = {}
    history_rows = []

    # exact-model plain MC baseline
    clock = clock_factory()
    result = mlmc.run_plain_mc(exact_level(system), system.sample_year,
                               stream(seed, "exact-mc", rep), clock,
                               t_budget=cfg["mlmc"]["t_sim"])
    records["Exact model"] = {
        "kind": "exact", "order": -1, "train_size": None, "t_train": 0.0,
        "metrics": None, **_result_record(result),
    }

    # one AL trajectory, checkpointed at each requested round count
    runs = al.run_active_learning(
        alcfg, max(al_rounds), system, params,
        stream(seed, "al", rep), clock_factory(), checkpoints=al_rounds,
    )
    checkpoint_metrics = {}
    for k in al_rounds:
        run = runs[k]
        name = f"AL ({k} rounds)"
        metrics = _evaluate_surrogate(run, test_sets)
        checkpoint_metrics[k] = metrics
        records[name] = {
            "kind": "al", "order": k,
            "train_size": run.n_labeled, "t_train": run.t_train,
            "metrics": metrics,
            **_mlmc_for_run(run, system, cfg, seed, rep, f"al{k}", clock_factory),
        }
    final = runs[max(al_rounds)]
    for entry in final.history:
        row = {"repetition": rep, **{k: v for k, v in entry.items()
                                     if k != "selected_indices"}}
        metrics = checkpoint_metrics.get(entry["round"])
        for key in ("rmse_lol", "rmse_ens", "corr_lol", "corr_ens"):
            row[key] = metrics[key] if metrics else ""
        history_rows.append(row)

    for j, size in enumerate(random_sizes):
        run = al.train_random(size, system, params,
                              stream(seed, "random", rep, j), clock_factory())
        name = f"Random surrogate ({size})"
        records[name] = {
            "kind": "random", "order": size,
            "train_size": run.n_labeled, "t_train": run.t_train,
            "metrics": _evaluate_surrogate(run, test_sets),
            **_mlmc_for_run(run, system, cfg, seed, rep, f"rnd{size}", clock_factory),
        }
    return records, history_rows


def _mean(values):
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else float("nan")


def _std(values):
    vals = [v for v in values if v is not None]
    return float(np.std(vals)) if vals else float("nan")


def aggregate(per_rep):
    """Arithmetic means (with stds) across repetitions, per variant."""
    names = list(per_rep[0].keys())
    rows = []
    for name in names:
        recs = [rep[name] for rep in per_rep]
        row = {
            "estimator": name,
            "kind": recs[0]["kind"],
            "order": recs[0]["order"],
            "train_size": recs[0]["train_size"],
        }
        for key in ("t_train", "t_sim", "est_lol", "est_ens", "ci_lol", "ci_ens",
                    "speed_lol", "speed_ens"):
            row[key] = _mean([r[key] for r in recs])
            row[key + "_std"] = _std([r[key] for r in recs])
        if recs[0]["metrics"] is not None:
            for key in ("rmse_lol", "rmse_ens", "corr_lol", "corr_ens"):
                row[key] = _mean([r["metrics"][key] for r in recs])
                row[key + "_std"] = _std([r["metrics"][key] for r in recs])
        rows.append(row)
    return rows


def _attach_break_evens(rows):
    """Chain each variant against its one-step-simpler alternative (the
    smallest of each chain pairs against the exact model)."""
    exact = next(r for r in rows if r["kind"] == "exact")
    exact["break_even_lol"] = None
    exact["break_even_ens"] = None
    for kind in ("al", "random"):
        chain = sorted((r for r in rows if r["kind"] == kind), key=lambda r: r["order"])
        prev = exact
        for row in chain:
            for metric in ("lol", "ens"):
                be = mlmc.break_even(
                    row[f"speed_{metric}"], row["t_train"],
                    prev[f"speed_{metric}"], prev["t_train"],
                )
                row[f"break_even_{metric}"] = be
            prev = row
    return rows


def _fmt(value, digits=4):
    if value is None:
        return "N/A"
    if isinstance(value, float) and math.isnan(value):
        return "NaN"
    return f"{value:.{digits}g}"


def write_table1(rows, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TABLE1_COLUMNS)
        for row in rows:
            be_lol = row["break_even_lol"]
            be_ens = row["break_even_ens"]
            writer.writerow([
                row["estimator"],
                "N/A" if row["train_size"] is None else row["train_size"],
                _fmt(row["t_train"]),
                _fmt(row["t_sim"]),
                f"{_fmt(row['est_lol'])} ± {_fmt(row['ci_lol'])}",
                _fmt(row["speed_lol"]),
                "N/A" if be_lol is None else be_lol.label(),
                f"{_fmt(row['est_ens'])} ± {_fmt(row['ci_ens'])}",
                _fmt(row["speed_ens"]),
                "N/A" if be_ens is None else be_ens.label(),
            ])


def write_al_history(history_rows, path):
    cols = ["repetition", "round", "n_labeled", "t_train", "pool_std_median",
            "pool_std_max", "selected_std_min", "unselected_std_max",
            "rmse_lol", "rmse_ens",
            "corr_lol", "corr_ens"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=cols)
        writer.writeheader()
        for row in history_rows:
            writer.writerow({k: row.get(k, "") for k in cols})


def _sweep_rows(rows):
    out = []
    for row in rows:
        if row["kind"] == "exact":
            continue
        out.append({
            "strategy": row["kind"],
            "train_size": row["train_size"],
            "t_train_mean": row["t_train"],
            **{k: row[k] for k in (
                "rmse_lol", "rmse_lol_std", "rmse_ens", "rmse_ens_std",
                "corr_lol", "corr_lol_std", "corr_ens", "corr_ens_std",
            )},
        })
    return out


def write_sweeps(rows, dir_path):
    sweep = _sweep_rows(rows)
    cols = ["strategy", "train_size", "t_train_mean",
            "rmse_lol", "rmse_lol_std", "rmse_ens", "rmse_ens_std",
            "corr_lol", "corr_lol_std", "corr_ens", "corr_ens_std"]
    for fname, key in (("sweep_by_size.csv", lambda r: (r["strategy"], r["train_size"])),
                       ("sweep_by_time.csv", lambda r: (r["strategy"], r["t_train_mean"]))):
        with open(os.path.join(dir_path, fname), "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=cols)
            writer.writeheader()
            for row in sorted(sweep, key=key):
                writer.writerow(row)


def _jsonable(obj):
    if isinstance(obj, mlmc.BreakEven):
        return {"status": obj.status, "t_star": obj.t_star,
                "performance": obj.performance}
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def run_experiment(cfg, out_dir=None, threads=1, deterministic_clock=False):
    """Run the full protocol and write report files; returns the table rows."""
    seed = cfg["seed"]
    out_dir = out_dir or cfg["output_dir"]
    os.makedirs(out_dir, exist_ok=True)
    clock_factory = _clock_factory(cfg, deterministic_clock)
    system = build_system(cfg, seed)
    test_sets = build_test_sets(cfg, system, seed)
    reps = range(cfg["repetitions"])
    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_run_repetition, r, cfg, system, test_sets,
                                   seed, clock_factory) for r in reps]
            results = [f.result() for f in futures]
    else:
        results = [_run_repetition(r, cfg, system, test_sets, seed, clock_factory)
                   for r in reps]
    per_rep = [r[0] for r in results]
    history_rows = [row for r in results for row in r[1]]
    rows = _attach_break_evens(aggregate(per_rep))

    write_table1(rows, os.path.join(out_dir, "table1.csv"))
    write_al_history(history_rows, os.path.join(out_dir, "al_history.csv"))
    write_sweeps(rows, out_dir)
    report = {
        "config": cfg,
        "table": rows,
        "per_repetition": per_rep,
        "al_history": history_rows,
    }
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(_jsonable(report), fh, indent=2, sort_keys=True)
    return rows
