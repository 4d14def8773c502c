"""Command line: ``ooclust run | sweep | validate``.

Exit status is 0 on success, 1 for a configuration error and 2 when a
simulation fails.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace

from .config import load_config
from .errors import ConfigError, SimulationError
from .experiment import CSV_HEADER, ExperimentSpec, emit_csv, emit_plots, run_cell, run_experiment
from .policies import POLICY_NAMES

log = logging.getLogger("ooclust")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument("--policy", choices=POLICY_NAMES, help="clustering policy")
    common.add_argument("--db-size", type=int, help="database initial size in objects")
    common.add_argument("--seed", type=int, help="random seed (base seed for a sweep)")
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="ooclust", description="Object clustering policy simulator.")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run one simulation and print its result row")
    sweep = sub.add_parser("sweep", parents=[common], help="sweep database sizes across policies")
    sweep.add_argument("--workers", type=int, help="parallel worker processes")
    sweep.add_argument("--no-plots", action="store_true", help="write the CSV only")
    sub.add_parser("validate", parents=[common], help="check a configuration and exit")
    return ap


def resolve_spec(args) -> ExperimentSpec:
    spec = load_config(args.config) if args.config else ExperimentSpec()
    if args.policy:
        spec = replace(spec, policies=[args.policy])
    if args.db_size is not None:
        spec = replace(spec, db_sizes=[args.db_size])
    if args.seed is not None:
        spec = replace(spec, base_seed=args.seed)
    if args.out:
        spec = replace(spec, out_dir=args.out)
    if getattr(args, "workers", None):
        spec = replace(spec, workers=args.workers)
    spec.validate()
    return spec


def cmd_run(args) -> int:
    spec = resolve_spec(args)
    t = spec.template
    policy = args.policy or t.policy.name
    size = args.db_size if args.db_size is not None else t.database.initial_objects
    seed = args.seed if args.seed is not None else t.seed
    row = run_cell(t, policy, size, seed)
    print(CSV_HEADER)
    print(",".join(row.as_strings()))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        emit_csv([row], os.path.join(args.out, "run.csv"))
    return 0


def cmd_sweep(args) -> int:
    spec = resolve_spec(args)
    n = len(spec.cells())
    done = []

    def progress(row):
        done.append(row)
        log.info(
            "[%d/%d] %s size=%d seed=%d response=%.4gs",
            len(done), n, row.policy, row.db_initial_size, row.seed, row.mean_response_time_s,
        )

    rows = run_experiment(spec, progress=progress)
    os.makedirs(spec.out_dir, exist_ok=True)
    path = os.path.join(spec.out_dir, "results.csv")
    emit_csv(rows, path)
    print(path)
    if not args.no_plots:
        for p in emit_plots(rows, spec.out_dir):
            print(p)
    return 0


def cmd_validate(args) -> int:
    spec = resolve_spec(args)
    print(f"ok: {len(spec.cells())} cells, policies={','.join(spec.policies)} sizes={spec.db_sizes}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    handler = {"run": cmd_run, "sweep": cmd_sweep, "validate": cmd_validate}[args.command]
    try:
        return handler(args)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 1
    except (SimulationError, OSError) as e:
        print(f"run failed: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
