"""Command-line entry point: `adeqmc run <config>` / `adeqmc validate <config>`."""

import argparse
import json
import sys

import yaml

from . import config as config_mod
from . import experiment


def _add_common(parser):
    parser.add_argument("config", help="experiment config file (YAML)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="adeqmc",
        description="MLMC resource adequacy assessment with surrogate models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the experiment described by a config file")
    _add_common(run)
    run.add_argument("--seed", type=int, help="override the config master seed")
    run.add_argument("--out", help="override the output directory")
    run.add_argument("--threads", type=int, default=1,
                     help="worker threads across repetitions")
    run.add_argument("--deterministic-clock", action="store_true",
                     help="force the synthetic cost model regardless of config")

    val = sub.add_parser("validate", help="check a config file without running")
    _add_common(val)
    return parser


def _load(path):
    try:
        return config_mod.load_config(path), None
    except FileNotFoundError:
        return None, [f"config file not found: {path}"]
    except yaml.YAMLError as exc:
        return None, [f"config is not valid YAML: {exc}"]
    except config_mod.ConfigError as exc:
        return None, exc.errors


def cmd_validate(args):
    cfg, errors = _load(args.config)
    if errors:
        print(f"{len(errors)} problem(s) found:")
        for err in errors:
            print(f"  - {err}")
        return 1
    print("OK")
    print("resolved configuration:")
    print(json.dumps(cfg, indent=2, sort_keys=True))
    return 0


def cmd_run(args):
    cfg, errors = _load(args.config)
    if errors:
        for err in errors:
            print(f"error: {err}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg["seed"] = args.seed
    try:
        rows = experiment.run_experiment(
            cfg,
            out_dir=args.out,
            threads=max(1, args.threads),
            deterministic_clock=args.deterministic_clock,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out_dir = args.out or cfg["output_dir"]
    print(f"wrote table1.csv, al_history.csv, sweep_by_size.csv, "
          f"sweep_by_time.csv, report.json to {out_dir}")
    for row in rows:
        print(f"  {row['estimator']}: LOLE {row['est_lol']:.4g} ± {row['ci_lol']:.3g} "
              f"(speed {row['speed_lol']:.3g}), EENS {row['est_ens']:.5g} ± "
              f"{row['ci_ens']:.4g} (speed {row['speed_ens']:.3g})")
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "validate":
        return cmd_validate(args)
    return cmd_run(args)


if __name__ == "__main__":
    sys.exit(main())
