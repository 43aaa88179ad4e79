"""Command-line interface for scenario execution and protocol inspection.

Subcommands:
  run         execute a scenario and write its metrics CSV
  sweep       same, with the T sweep overridden from the command line
  trace       run selected trials and dump per-round protocol records
  show-config print a preset or config file as JSON
"""

import argparse
import dataclasses
import json
import sys

from ..distributed import write_trace_records
from ..errors import ConfigurationError
from .config import (PRESET_NAMES, load_config, preset, config_to_dict)
from .metrics import emit_csv
from .runner import run_scenario


def _add_config_source(parser):
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", help="path to a scenario JSON file")
    source.add_argument("--preset", choices=PRESET_NAMES,
                        help="built-in experiment preset")


def _add_overrides(parser):
    parser.add_argument("--seed", type=int, default=None,
                        help="override the master seed")
    parser.add_argument("--trials", type=int, default=None,
                        help="override the number of Monte Carlo trials")
    parser.add_argument("--algorithms", default=None,
                        help="comma-separated subset, e.g. omp,wdiomp")


def _load(args):
    config = load_config(args.config) if args.config else preset(args.preset)
    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["master_seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        updates["trials"] = args.trials
    if getattr(args, "algorithms", None):
        updates["algorithms"] = tuple(
            a.strip() for a in args.algorithms.split(",") if a.strip())
    if getattr(args, "t_list", None):
        updates["t_list"] = tuple(
            int(t) for t in args.t_list.split(",") if t.strip())
    if updates:
        config = dataclasses.replace(config, **updates)
    return config.validate()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dsce",
        description="Cooperative distributed sparse channel estimation "
                    "simulations")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one scenario")
    _add_config_source(p_run)
    _add_overrides(p_run)
    p_run.add_argument("--t-list", default=None,
                       help="comma-separated T values overriding the config")
    p_run.add_argument("--out", required=True, help="output CSV path")
    p_run.add_argument("--trace", default=None,
                       help="also dump protocol traces to this JSON-lines file")

    p_sweep = sub.add_parser("sweep", help="execute with a T range sweep")
    _add_config_source(p_sweep)
    _add_overrides(p_sweep)
    p_sweep.add_argument("--t-start", type=int, required=True)
    p_sweep.add_argument("--t-stop", type=int, required=True)
    p_sweep.add_argument("--t-step", type=int, default=2)
    p_sweep.add_argument("--out", required=True, help="output CSV path")

    p_trace = sub.add_parser(
        "trace", help="dump per-round protocol records for a few trials")
    _add_config_source(p_trace)
    _add_overrides(p_trace)
    p_trace.add_argument("--t", type=int, required=True,
                         help="number of training slots")
    p_trace.add_argument("--max-trials", type=int, default=1,
                         help="how many trials to trace (default 1)")
    p_trace.add_argument("--out", required=True,
                         help="output JSON-lines path")

    p_show = sub.add_parser("show-config",
                            help="print the resolved configuration as JSON")
    _add_config_source(p_show)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "show-config":
            config = load_config(args.config) if args.config \
                else preset(args.preset)
            json.dump(config_to_dict(config), sys.stdout, indent=2)
            sys.stdout.write("\n")
            return 0

        if args.command == "sweep":
            if args.t_step < 1 or args.t_stop < args.t_start:
                raise ConfigurationError("invalid T range")
            args.t_list = ",".join(
                str(t) for t in range(args.t_start, args.t_stop + 1,
                                      args.t_step))
        config = _load(args)

        if args.command == "trace":
            config = dataclasses.replace(
                config, t_list=(args.t,), trials=args.max_trials).validate()
            records = []

            def sink(num_slots, label, trial, algorithm, trace):
                records.extend(trace.to_records(
                    T=num_slots, snr_tag=label, trial=trial))

            run_scenario(config, trace_sink=sink)
            write_trace_records(records, args.out)
            print(f"wrote {len(records)} records to {args.out}")
            return 0

        if getattr(args, "trace", None):
            records = []

            def sink(num_slots, label, trial, algorithm, trace):
                records.extend(trace.to_records(
                    T=num_slots, snr_tag=label, trial=trial))

            report = run_scenario(config, trace_sink=sink)
            write_trace_records(records, args.trace)
        else:
            report = run_scenario(config)
        emit_csv(report, args.out)
        print(f"wrote {len(report.rows)} rows to {args.out}")
        return 0
    except ConfigurationError as exc:
        parser.exit(2, f"configuration error: {exc}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
