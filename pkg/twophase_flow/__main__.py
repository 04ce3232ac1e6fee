"""Command-line entry point: ``python -m twophase_flow <verb> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any

from .config import load_config
from .const import DOMAIN, EXIT_INCOMPATIBLE, EXIT_OK, EXPORTABLE_SERIES, FORMAT_CSV, OUTPUT_FORMATS, VERSION
from .exceptions import TwoPhaseFlowError
from .runner import check, export_series, probe_norms, probe_smallness, run

_LOGGER = logging.getLogger(__name__)


def _parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(prog=DOMAIN, description="Two-phase free-boundary flow simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Log at DEBUG level")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Log warnings and errors only")
    verbs = parser.add_subparsers(dest="verb", required=True)

    check_parser = verbs.add_parser("check", help="Check compatibility of the initial data")
    check_parser.add_argument("config", type=Path)

    run_parser = verbs.add_parser("run", help="Solve and write all artifacts")
    run_parser.add_argument("config", type=Path)
    run_parser.add_argument("--output", type=Path, help="Run directory (overrides output.directory)")
    run_parser.add_argument("--threads", type=int, help="Workers for the per-wavenumber solves")

    export_parser = verbs.add_parser("export", help="Export one series of a finished run")
    export_parser.add_argument("run_dir", type=Path)
    export_parser.add_argument("quantity", choices=EXPORTABLE_SERIES)
    export_parser.add_argument("--format", dest="fmt", choices=OUTPUT_FORMATS, default=FORMAT_CSV)

    smallness_parser = verbs.add_parser("probe-smallness", help="Slope of eps -> |N(eps z)|")
    smallness_parser.add_argument("config", type=Path)
    smallness_parser.add_argument("--eps", type=float, nargs="+", default=[1e-1, 3e-2, 1e-2])

    norms_parser = verbs.add_parser("probe-norms", help="Measured multiplication and composition constants")
    norms_parser.add_argument("config", type=Path)
    norms_parser.add_argument("--pairs", type=int, default=20)
    norms_parser.add_argument("--seed", type=int, default=0)
    return parser.parse_args(argv)


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _emit(payload: dict[str, Any]) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def main(argv: list[str] | None = None) -> int:
    """Run one verb and return its exit code."""
    args = _parse_args(argv)
    _configure_logging(args)
    try:
        if args.verb == "check":
            report = check(load_config(args.config))
            _emit(report.to_dict())
            return EXIT_OK if report.passed else EXIT_INCOMPATIBLE
        if args.verb == "run":
            code, manifest = run(load_config(args.config), run_dir=args.output, threads=args.threads)
            _emit(manifest.to_dict())
            return code
        if args.verb == "export":
            print(export_series(args.run_dir, args.quantity, args.fmt))
            return EXIT_OK
        if args.verb == "probe-smallness":
            _emit(probe_smallness(load_config(args.config), args.eps).to_dict())
            return EXIT_OK
        _emit(probe_norms(load_config(args.config), pairs=args.pairs, seed=args.seed))
        return EXIT_OK
    except TwoPhaseFlowError as err:
        _LOGGER.error("%s", err)
        return err.exit_code


if __name__ == "__main__":
    sys.exit(main())
