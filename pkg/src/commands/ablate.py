import argparse
import re
from pathlib import Path

from src.commands.common import add_dataset_args, add_policy_args
from src.core.error_handlers import EXIT_OK
from src.repository.reports import REPORT_CSV, save_report, save_report_csv, save_table
from src.services.cost_model import load_cost_model
from src.services.harness import ablation_table, compare_policies, standard_ablation


ABLATION_CSV = "ablation.csv"


def slug(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9.]+", "-", label).strip("-").lower()


def register(subparsers: argparse._SubParsersAction) -> argparse.ArgumentParser:
    parser = subparsers.add_parser("ablate", help="compare the full method with ablations B1-B5")
    add_dataset_args(parser)
    add_policy_args(parser, with_kind=False)
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.add_argument("--csv", action="store_true", help="also write one per-scenario CSV per policy")
    parser.set_defaults(handler=handle)
    return parser


def handle(args: argparse.Namespace) -> int:
    """
    Run the standard ablation set over one dataset.

    Writes ``<index>-<label>.json`` per policy plus ``ablation.csv`` (one row
    per policy) under ``--out`` and prints the table.
    """
    policies = standard_ablation(
        delta=args.delta,
        fixed_depth=args.fixed_depth,
        start_layer=args.start_layer,
        metric=args.metric,
    )
    model = load_cost_model(args.cost_model)
    reports = compare_policies(args.traces, policies, model, args.horizons, args.workers)

    for index, report in enumerate(reports):
        name = f"{index}-{slug(report.policy.display_name)}"
        save_report(report, args.out / f"{name}.json")
        if args.csv:
            save_report_csv(report, args.out / f"{name}-{REPORT_CSV}")

    table = ablation_table(reports)
    save_table(table, args.out / ABLATION_CSV)
    print(table.to_string(index=False, float_format=lambda v: f"{v:.2f}"))
    return EXIT_OK
