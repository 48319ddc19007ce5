import argparse
from pathlib import Path
from typing import List

from src.conf.config import settings
from src.models.policies import PolicyKind
from src.schemas import ExitMetric, ExitPolicy, Report


def add_dataset_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--traces", type=Path, required=True, help="directory of trace files")
    parser.add_argument(
        "--cost-model",
        type=Path,
        default=None,
        help="cost-model JSON file (defaults from settings)",
    )
    parser.add_argument(
        "--horizons",
        type=float,
        nargs="+",
        default=None,
        help="report horizons in seconds (default: %s)" % " ".join(f"{h:g}" for h in settings.REPORT_HORIZONS_S),
    )
    parser.add_argument("--workers", type=int, default=None, help="evaluation threads")


def add_policy_args(parser: argparse.ArgumentParser, *, with_kind: bool = True) -> None:
    """Flags shared by every command that builds an :class:`ExitPolicy`."""
    if with_kind:
        parser.add_argument(
            "--policy",
            type=ExitPolicy.parse_kind,
            default=PolicyKind.multihop,
            help="multihop | fullscan | fixed | noexit (default: multihop)",
        )
    parser.add_argument("--delta", type=float, default=settings.DELTA_M, help="tolerance in meters")
    parser.add_argument("--start-layer", type=int, default=settings.START_LAYER)
    parser.add_argument("--fixed-depth", type=int, default=settings.FIXED_DEPTH)
    parser.add_argument(
        "--metric",
        type=ExitMetric.parse,
        default=ExitMetric(horizon_s=settings.EXIT_HORIZON_S),
        help="mean-l2 | l2@<t>s (default: l2@%gs)" % settings.EXIT_HORIZON_S,
    )


def policy_from_args(args: argparse.Namespace) -> ExitPolicy:
    kind = args.policy
    return ExitPolicy(
        kind=kind,
        delta=args.delta if kind in (PolicyKind.multihop, PolicyKind.fullscan) else None,
        start_layer=args.start_layer,
        fixed_depth=args.fixed_depth if kind is PolicyKind.fixed else None,
        metric=args.metric,
    )


def summary_line(report: Report) -> str:
    """One-line human summary of a report's aggregate row."""
    agg = report.aggregate
    parts: List[str] = [
        f"policy={report.policy.display_name}",
        f"scenarios={report.scenario_count}",
        f"exit_layer={agg['exit_layer'].mean:.2f}",
        f"checks={agg['checks'].mean:.2f}",
        f"latency_ms={agg['latency_ms'].mean:.1f}",
        f"sparsity_pct={agg['sparsity_pct'].mean:.1f}",
        f"exited_early_pct={report.exited_early_pct:.1f}",
    ]
    if "l2_avg" in agg:
        parts.append(f"l2_avg={agg['l2_avg'].mean:.3f}")
    return " ".join(parts)
