import argparse

from src.conf.config import settings
from src.core.error_handlers import EXIT_CHECK_FAILED, EXIT_OK
from src.schemas import ExitMetric
from src.services.harness import oracle_check


def register(subparsers: argparse._SubParsersAction) -> argparse.ArgumentParser:
    parser = subparsers.add_parser(
        "oracle-check",
        help="multi-hop vs full scan on seeded bounded-decrease traces",
    )
    parser.add_argument("--n", type=int, default=10_000, help="number of traces")
    parser.add_argument("--delta", type=float, default=settings.DELTA_M)
    parser.add_argument("--seed", type=int, required=True)
    parser.add_argument("--layers", type=int, default=settings.TOTAL_LAYERS)
    parser.add_argument("--start-layer", type=int, default=settings.START_LAYER)
    parser.add_argument("--metric", type=ExitMetric.parse, default=ExitMetric(horizon_s=settings.EXIT_HORIZON_S))
    parser.set_defaults(handler=handle)
    return parser


def handle(args: argparse.Namespace) -> int:
    """Print ``N/N agree`` and ``N/N dominate``; status 7 on any disagreement."""
    summary = oracle_check(
        n=args.n,
        delta=args.delta,
        seed=args.seed,
        total_layers=args.layers,
        start_layer=args.start_layer,
        metric=args.metric,
    )
    print(f"{summary.agree}/{summary.n} agree")
    print(f"{summary.dominate}/{summary.n} dominate")
    if not summary.passed:
        print(f"first disagreement at seed {summary.first_disagreement}")
        return EXIT_CHECK_FAILED
    return EXIT_OK
