import json
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np

from src.conf.config import settings
from src.core.exceptions import DegenerateAnchorsError
from src.schemas import AnchorCheck, CostModel, ExitOutcome, LatencyAnchor


logger = logging.getLogger(__name__)

#: Published end-to-end latency rows of a 32-layer planner.
TABLE_ANCHORS: List[LatencyAnchor] = [
    LatencyAnchor(layers_executed=16, checks=1, total_ms=203.0, label="exit@16"),
    LatencyAnchor(layers_executed=32, checks=16, total_ms=440.0, label="exit@32 (early exit)"),
    LatencyAnchor(layers_executed=32, checks=0, total_ms=381.0, label="exit@32 (no early exit)"),
]

#: The two mutually consistent rows used for calibration.
CALIBRATION_ANCHORS: List[LatencyAnchor] = [TABLE_ANCHORS[2], TABLE_ANCHORS[0]]


def default_cost_model() -> CostModel:
    """Cost model built from the settings defaults (fitted fixed/per-layer + check decomposition)."""
    return CostModel(
        fixed_ms=settings.FIXED_MS,
        per_layer_ms=settings.PER_LAYER_MS,
        metric_ms=settings.METRIC_MS,
        feature_ms=settings.FEATURE_MS,
        head_ms=settings.HEAD_MS,
    )


def load_cost_model(path: Optional[Path] = None) -> CostModel:
    """
    Read a cost-model JSON file.

    The file is an object with any of ``fixed_ms``, ``per_layer_ms``,
    ``metric_ms``, ``feature_ms``, ``head_ms``; missing fields keep their
    defaults, unknown fields are rejected.

    :param path: JSON file, or ``None`` for the defaults.
    :type path: Path | None
    :raises pydantic.ValidationError: On unknown or negative fields.
    :return: Validated cost model.
    :rtype: CostModel

    Example file::

        {"fixed_ms": 15.2, "per_layer_ms": 11.43125,
         "metric_ms": 0.2, "feature_ms": 0.7, "head_ms": 4.0}
    """
    base = default_cost_model()
    if path is None:
        return base
    overrides = json.loads(Path(path).read_text(encoding="utf-8"))
    model = CostModel.model_validate({**base.model_dump(), **overrides})
    logger.info(f"Cost model loaded from {path}")
    return model


def latency(outcome: ExitOutcome, model: CostModel) -> float:
    """
    End-to-end latency of one outcome in milliseconds.

    ``fixed_ms + per_layer_ms * exit_layer + check_ms * checks``. A vanilla
    outcome (final layer, zero checks) reduces to the baseline.

    :param outcome: Exit decision.
    :type outcome: ExitOutcome
    :param model: Cost model.
    :type model: CostModel
    :return: Latency (ms).
    :rtype: float
    """
    return predict_ms(model, outcome.exit_layer, outcome.checks)


def predict_ms(model: CostModel, layers_executed: int, checks: int) -> float:
    return model.fixed_ms + model.per_layer_ms * layers_executed + model.check_ms * checks


def baseline_latency(model: CostModel, total_layers: int) -> float:
    """Latency of full-depth inference without exit checks."""
    return predict_ms(model, total_layers, 0)


def sparsity(outcome: ExitOutcome, total_layers: Optional[int] = None) -> float:
    """
    Percentage of decoder layers skipped: ``100 * (L - exit_layer) / L``.

    :param outcome: Exit decision.
    :type outcome: ExitOutcome
    :param total_layers: Depth ``L``; defaults to ``outcome.total_layers``.
    :type total_layers: int | None
    :raises ValueError: If ``exit_layer`` exceeds ``L``.
    :return: Sparsity in ``[0, 100]``.
    :rtype: float
    """
    L = total_layers or outcome.total_layers
    if outcome.exit_layer > L:
        raise ValueError(f"exit_layer {outcome.exit_layer} exceeds total layers {L}")
    return 100.0 * (L - outcome.exit_layer) / L


def speedup_pct(latency_ms: float, baseline_ms: float) -> float:
    """Latency reduction relative to the baseline, in percent (negative when slower)."""
    if baseline_ms == 0:
        return 0.0
    return 100.0 * (baseline_ms - latency_ms) / baseline_ms


def fit_cost_model(
    anchors: Sequence[LatencyAnchor],
    metric_ms: Optional[float] = None,
    feature_ms: Optional[float] = None,
    head_ms: Optional[float] = None,
) -> CostModel:
    """
    Least-squares fit of ``fixed_ms`` and ``per_layer_ms`` to latency anchors.

    The per-check cost is supplied externally (its decomposition defaults to
    the settings values) and subtracted before fitting
    ``total - check_ms * checks = fixed + per_layer * layers``. Exact for two
    anchors.

    :param anchors: At least two anchors with distinct ``layers_executed``.
    :type anchors: Sequence[LatencyAnchor]
    :raises DegenerateAnchorsError: With fewer than two distinct depths, or
        when the fit implies negative costs.
    :return: Fitted model carrying the check decomposition.
    :rtype: CostModel

    Example::

        >>> m = fit_cost_model(CALIBRATION_ANCHORS)
        >>> round(m.per_layer_ms, 5), round(m.fixed_ms, 5)
        (11.43125, 15.2)
    """
    metric_ms = settings.METRIC_MS if metric_ms is None else metric_ms
    feature_ms = settings.FEATURE_MS if feature_ms is None else feature_ms
    head_ms = settings.HEAD_MS if head_ms is None else head_ms
    check_ms = metric_ms + feature_ms + head_ms

    depths = {a.layers_executed for a in anchors}
    if len(depths) < 2:
        raise DegenerateAnchorsError(
            f"need >= 2 anchors with distinct depths, got {len(anchors)} anchor(s) over {len(depths)} depth(s)"
        )

    A = np.array([[1.0, a.layers_executed] for a in anchors])
    b = np.array([a.total_ms - check_ms * a.checks for a in anchors])
    (fixed, per_layer), *_ = np.linalg.lstsq(A, b, rcond=None)

    if fixed < -1e-9 or per_layer < -1e-9:
        raise DegenerateAnchorsError(
            f"anchors imply negative costs (fixed={fixed:.3f} ms, per_layer={per_layer:.3f} ms)"
        )

    logger.info(f"Fitted cost model: fixed={fixed:.5f} ms, per_layer={per_layer:.5f} ms")
    return CostModel(
        fixed_ms=max(float(fixed), 0.0),
        per_layer_ms=max(float(per_layer), 0.0),
        metric_ms=metric_ms,
        feature_ms=feature_ms,
        head_ms=head_ms,
    )


def check_anchors(
    model: CostModel,
    anchors: Iterable[LatencyAnchor] = TABLE_ANCHORS,
    tolerance_ms: float = 0.5,
) -> List[AnchorCheck]:
    """
    Compare published latency rows with the model's prediction.

    Rows whose residual exceeds ``tolerance_ms`` are reported as
    inconsistent rather than fitted (the 440 ms row predicts 459.4 ms).

    :return: One check per anchor, in input order.
    :rtype: list[AnchorCheck]
    """
    checks = []
    for anchor in anchors:
        predicted = predict_ms(model, anchor.layers_executed, anchor.checks)
        residual = anchor.total_ms - predicted
        consistent = abs(residual) <= tolerance_ms
        if not consistent:
            logger.warning(
                f"Anchor {anchor.label or anchor.layers_executed}: published {anchor.total_ms} ms, "
                f"model predicts {predicted:.1f} ms"
            )
        checks.append(
            AnchorCheck(
                label=anchor.label or f"exit@{anchor.layers_executed}",
                layers_executed=anchor.layers_executed,
                checks=anchor.checks,
                published_ms=anchor.total_ms,
                predicted_ms=predicted,
                residual_ms=residual,
                consistent=consistent,
            )
        )
    return checks
