"""Command line entry point: ``python -m ris_vlc run|oracle|validate <config>``."""
from __future__ import annotations

import argparse
import logging
from pathlib import Path
import sys
from typing import Optional, Sequence

from .config import load_config
from .const import DOMAIN, STARTUP_MESSAGE
from .errors import ConfigValidationError, RisVlcError
from .scenario import (
    build_objective,
    describe_position,
    emit_csv,
    emit_trace_csv,
    oracle_grid_search,
    run_scenario,
)

_LOGGER: logging.Logger = logging.getLogger(__package__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_FAILED = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=DOMAIN,
        description="Simulate and optimise a mirror-array RIS and LC receiver VLC link.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run a scenario and write the result CSV")
    oracle = commands.add_parser("oracle", help="grid-search the configured scene")
    validate = commands.add_parser("validate", help="only validate a scenario file")
    for sub in (run, oracle, validate):
        sub.add_argument("config", type=Path, help="YAML scenario file")
    for sub in (run, oracle):
        sub.add_argument("--seed", type=int, help="seed of both random streams")
    run.add_argument("--trials", type=int, help="Monte-Carlo trials per sweep point")
    run.add_argument("--out", type=Path, help="result CSV path")
    run.add_argument("--trace", type=Path, help="write per-iteration traces here")
    run.add_argument(
        "--timing", action="store_true", help="add an elapsed_ms column to the CSV"
    )
    return parser


def _run(args) -> int:
    cfg = load_config(args.config).with_overrides(
        seed=args.seed, trials=args.trials, output=args.out
    )
    traces = [] if args.trace else None
    rows = run_scenario(cfg, traces)
    emit_csv(rows, cfg.output, timing=args.timing)
    if args.trace:
        emit_trace_csv(traces, args.trace)
    return EXIT_OK


def _oracle(args) -> int:
    cfg = load_config(args.config).with_overrides(seed=args.seed)
    objective = build_objective(cfg, cfg.scene)
    result = oracle_grid_search(cfg, objective=objective)
    for name, value in describe_position(objective, result.x).items():
        print(f"{name} = {value:.9g}")
    print(f"fitness = {result.fun:.9g}")
    print(f"evaluations = {result.nfev}")
    return EXIT_OK


def _validate(args) -> int:
    cfg = load_config(args.config)
    print(f"{args.config}: valid {cfg.kind} scenario")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    _LOGGER.info(STARTUP_MESSAGE)
    handler = {"run": _run, "oracle": _oracle, "validate": _validate}[args.command]
    try:
        return handler(args)
    except ConfigValidationError as ex:
        _LOGGER.error("Invalid scenario: %s", ex)
        return EXIT_INVALID
    except (RisVlcError, OSError) as ex:
        _LOGGER.error("Run failed: %s", ex)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
