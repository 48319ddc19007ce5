import argparse
import json
from pathlib import Path

from src.commands.common import add_dataset_args, add_policy_args, policy_from_args
from src.core.error_handlers import EXIT_OK
from src.services.cost_model import load_cost_model
from src.services.harness import evaluate_dataset


def register(subparsers: argparse._SubParsersAction) -> argparse.ArgumentParser:
    parser = subparsers.add_parser("histogram", help="exit-layer histogram of a dataset under a policy")
    add_dataset_args(parser)
    add_policy_args(parser)
    parser.add_argument("--out", type=Path, default=None, help="write the histogram as JSON")
    parser.set_defaults(handler=handle)
    return parser


def handle(args: argparse.Namespace) -> int:
    """Print one ``L<layer> <count> <share>%`` line per exit layer, sorted by layer."""
    report = evaluate_dataset(
        args.traces, policy_from_args(args), load_cost_model(args.cost_model), args.horizons, args.workers
    )
    for layer, count in report.exit_histogram.items():
        print(f"L{layer} {count} {100.0 * count / report.scenario_count:.1f}%")

    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        data = {str(layer): count for layer, count in report.exit_histogram.items()}
        args.out.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK
