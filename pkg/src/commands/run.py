import argparse
from pathlib import Path

from src.commands.common import add_dataset_args, add_policy_args, policy_from_args, summary_line
from src.core.error_handlers import EXIT_OK
from src.repository.reports import REPORT_CSV, REPORT_JSON, save_report, save_report_csv
from src.services.cost_model import load_cost_model
from src.services.harness import evaluate_dataset


def register(subparsers: argparse._SubParsersAction) -> argparse.ArgumentParser:
    parser = subparsers.add_parser("run", help="evaluate one exit policy over a trace dataset")
    add_dataset_args(parser)
    add_policy_args(parser)
    parser.add_argument("--out", type=Path, required=True, help="output directory for report.json")
    parser.add_argument("--csv", action="store_true", help="also write the per-scenario report.csv")
    parser.set_defaults(handler=handle)
    return parser


def handle(args: argparse.Namespace) -> int:
    """
    Evaluate a policy, write ``report.json`` (and ``report.csv``) under ``--out``
    and print the aggregate row.

    Example::

        action-exit run --traces dataset --delta 1.0 --policy multihop \\
            --start-layer 13 --metric l2@2s --out report
    """
    policy = policy_from_args(args)
    model = load_cost_model(args.cost_model)
    report = evaluate_dataset(args.traces, policy, model, args.horizons, args.workers)

    save_report(report, args.out / REPORT_JSON)
    if args.csv:
        save_report_csv(report, args.out / REPORT_CSV)

    print(summary_line(report))
    return EXIT_OK
