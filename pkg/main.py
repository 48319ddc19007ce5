import argparse
import logging
import sys
from typing import List, Optional

from src.commands import ablate, fit_cost, gen, histogram, oracle, run
from src.conf.config import settings
from src.core.error_handlers import EXIT_USAGE, handle_exception
from src.core.log_config import setup_logging


logger = logging.getLogger("action_exit")


def build_parser() -> argparse.ArgumentParser:
    """
    Command-line parser with one subparser per command module.

    :return: Configured parser.
    :rtype: argparse.ArgumentParser
    """
    parser = argparse.ArgumentParser(
        prog="action-exit",
        description="Action-guided early exit for layerwise trajectory planners: "
        "generate traces, evaluate exit policies, run ablations and latency fits.",
    )
    parser.add_argument("--log-level", default=None, help=f"log level (default: {settings.LOG_LEVEL})")
    parser.add_argument(
        "--log-json",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="JSON log lines on stderr",
    )

    # Register commands
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for module in (gen, run, ablate, oracle, fit_cost, histogram):
        module.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    CLI entry point.

    Parses ``argv``, configures logging and dispatches to the subcommand
    handler. Any exception is mapped to an exit status by
    :func:`src.core.error_handlers.handle_exception`, which also yields the
    single diagnostic line printed to standard error.

    :param argv: Arguments without the program name (``sys.argv[1:]`` if None).
    :type argv: list[str] | None
    :return: Process exit status (0 on success).
    :rtype: int
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed usage / help
        return EXIT_USAGE if exc.code not in (0, None) else 0

    try:
        setup_logging(
            args.log_level or settings.LOG_LEVEL,
            settings.LOG_JSON if args.log_json is None else args.log_json,
        )
        return args.handler(args)
    except Exception as exc:
        status, line = handle_exception(exc, args.command)
        print(line, file=sys.stderr)
        return status


if __name__ == "__main__":
    sys.exit(main())

# poetry run action-exit run --traces dataset --delta 1.0 --out report
# python main.py oracle-check --n 10000 --delta 1.0 --seed 7
