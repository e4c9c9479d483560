"""
Command-line entry point for the txsc toolkit.

Builds the argument parser from the command modules, initializes logging
and maps every escaping exception to the toolkit's exit codes.
"""

import argparse
import sys
from typing import Optional, Sequence

from txsc.commands import COMMAND_MODULES
from txsc.core.config import get_settings
from txsc.core.exceptions import EXIT_USAGE, handle_exception
from txsc.core.logging import get_logger, setup_logging

logger = get_logger(__name__)


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(
        prog=settings.app_name,
        description="Parse, analyze, transform, simulate and check transactional smart contracts.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.app_version}")
    parser.add_argument("--seed", type=int, help="Override the seed of scenarios, recipes and sweeps")
    parser.add_argument("--json", action="store_true", help="Machine-readable output on stdout")
    parser.add_argument("--log-level", help=f"Logging level (default {settings.log_level})")

    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    for module in COMMAND_MODULES:
        module.register(subparsers)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # --help and --version exit 0; argparse errors exit 2
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    try:
        setup_logging(args.log_level)
    except AttributeError:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"{parser.prog}: error: unknown log level '{args.log_level}'\n")
        return EXIT_USAGE

    logger.debug(f"Running command {args.command}")
    try:
        return args.handler(args)
    except Exception as exc:
        return handle_exception(exc)


if __name__ == "__main__":
    sys.exit(main())
