import argparse
from pathlib import Path

from src.conf.config import settings
from src.core.error_handlers import EXIT_OK
from src.schemas import LatencyAnchor
from src.services.cost_model import CALIBRATION_ANCHORS, TABLE_ANCHORS, check_anchors, fit_cost_model


def parse_anchor(text: str) -> LatencyAnchor:
    """
    Parse ``LAYERS:CHECKS:MS`` (e.g. ``16:1:203``).

    :raises ValueError: On a malformed anchor.
    """
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"anchor {text!r} must be LAYERS:CHECKS:MS")
    return LatencyAnchor(layers_executed=int(parts[0]), checks=int(parts[1]), total_ms=float(parts[2]), label=text)


def register(subparsers: argparse._SubParsersAction) -> argparse.ArgumentParser:
    parser = subparsers.add_parser("fit-cost", help="fit fixed / per-layer latency to anchors")
    parser.add_argument(
        "--anchor",
        type=parse_anchor,
        action="append",
        default=None,
        help="LAYERS:CHECKS:MS, repeatable (default: the 381 ms and 203 ms rows)",
    )
    parser.add_argument("--metric-ms", type=float, default=settings.METRIC_MS)
    parser.add_argument("--feature-ms", type=float, default=settings.FEATURE_MS)
    parser.add_argument("--head-ms", type=float, default=settings.HEAD_MS)
    parser.add_argument("--tolerance-ms", type=float, default=0.5)
    parser.add_argument("--out", type=Path, default=None, help="write the fitted cost model as JSON")
    parser.set_defaults(handler=handle)
    return parser


def handle(args: argparse.Namespace) -> int:
    """
    Fit the cost model, then compare every anchor and published latency row
    against it. Inconsistent rows are reported, never fitted.
    """
    anchors = args.anchor or CALIBRATION_ANCHORS
    model = fit_cost_model(anchors, args.metric_ms, args.feature_ms, args.head_ms)

    print(f"fixed_ms={model.fixed_ms:.5f} per_layer_ms={model.per_layer_ms:.5f} check_ms={model.check_ms:.2f}")
    seen = {(a.layers_executed, a.checks, a.total_ms) for a in anchors}
    rows = list(anchors) + [a for a in TABLE_ANCHORS if (a.layers_executed, a.checks, a.total_ms) not in seen]
    for check in check_anchors(model, rows, args.tolerance_ms):
        status = "ok" if check.consistent else "INCONSISTENT"
        print(
            f"{check.label}: layers={check.layers_executed} checks={check.checks} "
            f"published={check.published_ms:.1f} predicted={check.predicted_ms:.1f} "
            f"residual={check.residual_ms:+.1f} {status}"
        )

    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(model.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return EXIT_OK
