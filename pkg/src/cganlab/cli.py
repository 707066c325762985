"""Command-line entry point.

    cganlab list
    cganlab run <scenario> [--config PATH] [--seed N] [--out DIR] [--preset desk|paper]
    cganlab rerun <manifest.json or run directory> [--out DIR]

Exit codes: 0 success, 1 config error, 2 data error, 3 numeric failure,
4 usage error or unknown scenario.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import scenarios
from .config import ConfigError
from .dataio import DataError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3
EXIT_USAGE = 4


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which would collide with the data-error code
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cganlab", description="Run the conditional-GAN experiments.")
    p.add_argument("-v", "--verbose", action="store_true", help="log training progress")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("list", help="list registered scenarios")
    run = sub.add_parser("run", help="run one scenario")
    run.add_argument("scenario")
    run.add_argument("--config", help="INI file with [train]/[model]/[data]/[eval]/[run] overrides")
    run.add_argument("--seed", type=int)
    run.add_argument("--out", default=None, help="output directory (default: runs/<scenario>)")
    run.add_argument("--preset", default="desk", choices=("desk", "paper"))
    rerun = sub.add_parser("rerun", help="rerun from a manifest")
    rerun.add_argument("manifest")
    rerun.add_argument("--out", default=None)
    return p


def _print_metrics(metrics) -> None:
    for k in sorted(metrics):
        print(f"{k} = {metrics[k]}")


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"cganlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")

    if args.command == "list":
        for name, sc in scenarios.REGISTRY.items():
            print(f"{name:28s} {sc.summary}")
        return EXIT_OK
    try:
        if args.command == "run":
            if args.scenario not in scenarios.REGISTRY:
                print(f"cganlab: unknown scenario {args.scenario!r}; try 'cganlab list'", file=sys.stderr)
                return EXIT_USAGE
            out = args.out or f"runs/{args.scenario}"
            result = scenarios.run_scenario(
                args.scenario, preset=args.preset, seed=args.seed, out_dir=out, config_path=args.config
            )
        else:
            result = scenarios.rerun_manifest(args.manifest, args.out or "runs/rerun")
    except ConfigError as exc:
        print(f"cganlab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"cganlab: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except KeyError as exc:
        # unknown scenario named inside a manifest
        print(f"cganlab: {exc.args[0]}", file=sys.stderr)
        return EXIT_USAGE
    except (FloatingPointError, ArithmeticError) as exc:
        print(f"cganlab: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _print_metrics(result.metrics)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
