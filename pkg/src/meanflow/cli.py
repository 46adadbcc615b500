"""Command-line entry point.

    meanflow run <config-path> [--out DIR] [--seed N] [--threads K]
    meanflow validate <config-path>
    meanflow list-scenarios

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 acceptance check failed.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .config import SCENARIOS, load_config
from .errors import ConfigurationError
from .scenarios import SCENARIO_DOCS, run_scenario


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="meanflow",
                                description="Stochastic perturbations of inviscid "
                                            "flows on the flat torus")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario from a config file")
    run.add_argument("config", help="path to the INI config")
    run.add_argument("--out", default=None, help="output directory (overrides config)")
    run.add_argument("--seed", type=int, default=None, help="override master_seed")
    run.add_argument("--threads", type=int, default=1, help="fft worker count")

    val = sub.add_parser("validate", help="validate a config file without running")
    val.add_argument("config")

    sub.add_parser("list-scenarios", help="list available scenarios")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-scenarios":
        for name in SCENARIOS:
            print(f"{name}: {SCENARIO_DOCS[name]}")
        return 0
    try:
        cfg = load_config(args.config)
    except ConfigurationError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    if args.command == "validate":
        print(f"ok: scenario {cfg.scenario}, grid {cfg.grid.sizes}, "
              f"sigma = {cfg.sigma:.6g}, nu = {cfg.nu:.6g}")
        return 0
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, master_seed=args.seed)
    return run_scenario(cfg, out_dir=args.out, threads=args.threads)


if __name__ == "__main__":
    sys.exit(main())
