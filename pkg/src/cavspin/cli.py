"""Command-line entry point.

    cavspin run <scenario> --config <path|builtin> --seed <u64> [--shots N]
                [--out DIR] [--paper-scale] [--atoms N] [--photons N]
    cavspin validate --config <path|builtin>
    cavspin report <dir>

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from .config import ConfigError, resolve_config
from .dynamics import IntegrationError
from .ensemble import (cooperativity, exchange_rate, knudsen_ordering,
                       lateral_rate)
from .estimators import EstimationError, FitError
from .scenarios import SCENARIO_NAMES, Scenario, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="cavspin",
        description="Collective-spin cavity measurement simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a scenario")
    run.add_argument("scenario", choices=SCENARIO_NAMES)
    run.add_argument("--config", required=True,
                     help="config file path or builtin name (e.g. 'paper')")
    run.add_argument("--seed", type=int, required=True)
    run.add_argument("--shots", type=int, default=200)
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--paper-scale", action="store_true",
                     help="sample the full configured atom number")
    run.add_argument("--atoms", type=int, default=None,
                     help="override the desk-scale sampled atom count")
    run.add_argument("--photons", type=float, default=None,
                     help="override the detected photons per measurement")
    run.add_argument("--bootstrap", type=int, default=400)

    val = sub.add_parser("validate", help="check a configuration file")
    val.add_argument("--config", required=True)

    rep = sub.add_parser("report", help="summarize a finished run directory")
    rep.add_argument("dir")
    return parser


def _cmd_run(args) -> int:
    cfg = resolve_config(args.config)
    kwargs = {}
    if args.atoms is not None:
        kwargs["sampled_atoms"] = args.atoms
    if args.photons is not None:
        kwargs["detected_photons"] = args.photons
    scn = Scenario(name=args.scenario, config=cfg, seed=args.seed,
                   shots=args.shots, out_dir=args.out,
                   paper_scale=args.paper_scale, n_bootstrap=args.bootstrap,
                   **kwargs)
    summary = run_scenario(scn)
    if args.out is None:
        json.dump(summary, sys.stdout, indent=1, sort_keys=True)
        sys.stdout.write("\n")
    else:
        print(f"wrote {os.path.join(args.out, 'shots.csv')} and summary.json")
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg = resolve_config(args.config)
    trap = cfg.trap()
    cav = cfg.cavity()
    print(f"config digest        {cfg.digest()}")
    print(f"exchange rate        {exchange_rate(trap) / (2 * math.pi):.4g} Hz")
    print(f"lateral rate         {lateral_rate(trap):.4g} 1/s")
    print(f"cooperativity        {cooperativity(cav):.4g}")
    print(f"knudsen ordering     {'ok' if knudsen_ordering(trap) else 'VIOLATED'}")
    print("config ok")
    return EXIT_OK


def _cmd_report(args) -> int:
    path = os.path.join(args.dir, "summary.json")
    if not os.path.exists(path):
        print(f"no summary.json in {args.dir}", file=sys.stderr)
        return EXIT_CONFIG
    with open(path, "r", encoding="utf-8") as fh:
        summary = json.load(fh)
    print(f"scenario   {summary.get('scenario')}")
    print(f"seed       {summary.get('seed')}   shots {summary.get('shots')}")
    print(f"atoms      {summary.get('sampled_atoms')}"
          f"{' (paper scale)' if summary.get('paper_scale') else ''}")
    points = summary.get("points")
    if points:
        keys = [k for k in points[0] if not isinstance(points[0][k], (list, dict))]
        print("  ".join(f"{k:>18s}" for k in keys))
        for p in points:
            print("  ".join(_cell(p.get(k)) for k in keys))
    else:
        for key in ("mean_detected", "measured_variance", "psn_variance",
                    "psn_within_ci"):
            if key in summary:
                print(f"{key:22s} {summary[key]}")
    return EXIT_OK


def _cell(v):
    if isinstance(v, float):
        return f"{v:>18.6g}"
    return f"{str(v):>18s}"


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "validate":
            return _cmd_validate(args)
        return _cmd_report(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, EstimationError, FitError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
