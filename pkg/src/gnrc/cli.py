"""Command line entry point: ``gnrc run | verify | list-scenarios``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from typing import List, Optional

from .config import load_config
from .errors import ConfigError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
        if args.tol is not None:
            if not args.tol > 0:
                raise ConfigError("--tol must be positive")
            cfg = replace(cfg, tolerances=replace(cfg.tolerances, bound=args.tol))
        if args.jobs is not None and args.jobs < 1:
            raise ConfigError("--jobs must be a positive integer")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    from .study import run_study

    out = args.out or cfg.outputs or "results"
    result = run_study(cfg, out, args.jobs)
    for row in result.rows:
        status = "pass" if row.passed else "FAIL"
        if row.error:
            print(f"n={row.n}: {status} ({row.error})")
        else:
            print(f"n={row.n}: {status} delta={row.delta:.4e} d_norm={row.d_norm:.4e} "
                  f"speed_lift={row.bound_speed_lift:.4e}")
    print(f"wrote {result.csv_path} and {result.summary_path}")
    return EXIT_OK if result.ok else EXIT_FAIL


def _cmd_verify(args) -> int:
    from .acceptance import CRITERIA, verify_suite

    only = None
    if args.filter:
        try:
            only = [int(x) for x in args.filter.split(",")]
        except ValueError:
            print(f"--filter expects criterion numbers, got {args.filter!r}", file=sys.stderr)
            return EXIT_CONFIG
        unknown = [c for c in only if c not in CRITERIA]
        if unknown:
            print(f"unknown criteria {unknown}; available 1..{max(CRITERIA)}", file=sys.stderr)
            return EXIT_CONFIG
    return verify_suite(only)


def _cmd_list(args) -> int:
    from .scenarios import FAMILIES
    from .scenarios.multiplication import EXAMPLES

    for name, desc in FAMILIES.items():
        print(f"{name:15s} {desc}")
    print(f"{'':15s} multiplication examples: {', '.join(EXAMPLES)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gnrc", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a convergence study from a YAML config")
    run.add_argument("--config", required=True)
    run.add_argument("--out", help="output directory (overrides 'outputs' in the config)")
    run.add_argument("--jobs", type=int, help="rows evaluated concurrently")
    run.add_argument("--tol", type=float, help="tolerance for the speed bounds")
    run.set_defaults(func=_cmd_run)

    ver = sub.add_parser("verify", help="run the built-in acceptance suite")
    ver.add_argument("--filter", help="comma-separated criterion numbers")
    ver.set_defaults(func=_cmd_verify)

    ls = sub.add_parser("list-scenarios", help="list the built-in scenario families")
    ls.set_defaults(func=_cmd_list)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
