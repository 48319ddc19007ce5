import json

import pytest
from pydantic import ValidationError

from src.core.exceptions import DegenerateAnchorsError
from src.conf.config import Settings, settings
from src.schemas import CostModel, ExitOutcome, LatencyAnchor
from src.services.cost_model import (
    CALIBRATION_ANCHORS,
    TABLE_ANCHORS,
    baseline_latency,
    check_anchors,
    default_cost_model,
    fit_cost_model,
    latency,
    load_cost_model,
    predict_ms,
    sparsity,
    speedup_pct,
)

# Run with: pytest tests/unit/test_cost_model.py -v

pytestmark = [pytest.mark.unit, pytest.mark.cost]


def outcome(exit_layer: int, checks: int, reference, total_layers: int = 32) -> ExitOutcome:
    """Outcome with ``checks`` checks ending at ``exit_layer``."""
    layers = tuple(range(exit_layer - checks + 1, exit_layer + 1))
    return ExitOutcome(
        exit_layer=exit_layer,
        checked_layers=layers,
        exit_score={"value": 0.0},
        adopted=reference,
        exited_early=exit_layer < total_layers or checks > 0,
        total_layers=total_layers,
    )


# ----------------------------------------------------------------------
# Calibration
# ----------------------------------------------------------------------


def test_check_cost_comes_from_settings_components(monkeypatch):
    """
    Per-check cost of the default model with HEAD_MS overridden to 1.0.

    Expect:
    - check_ms == 0.2 + 0.7 + 1.0
    - the sum lives on the cost model only, not on Settings
    """
    monkeypatch.setattr(settings, "HEAD_MS", 1.0)
    assert default_cost_model().check_ms == pytest.approx(
        settings.METRIC_MS + settings.FEATURE_MS + 1.0, abs=1e-12
    )
    assert not hasattr(Settings, "check_ms")


def test_fit_reproduces_consistent_rows():
    """
    Anchors (32, 0, 381) and (16, 1, 203), check 4.9 ms.

    Expect:
    - per_layer 11.43125, fixed 15.2
    - 381.0 exactly at full depth, 203 ± 0.5 at exit 16 with one check
    """
    model = fit_cost_model(CALIBRATION_ANCHORS)
    assert model.check_ms == pytest.approx(4.9)
    assert model.per_layer_ms == pytest.approx(11.43125, abs=1e-9)
    assert model.fixed_ms == pytest.approx(15.2, abs=1e-9)
    assert predict_ms(model, 32, 0) == pytest.approx(381.0, abs=1e-9)
    assert abs(predict_ms(model, 16, 1) - 203.0) <= 0.5


def test_inconsistent_row_is_reported_not_fitted(cost_model):
    """
    The 440 ms row against the fitted model.

    Expect:
    - predicted 459.4 ms, flagged inconsistent
    - the two calibration rows are consistent
    """
    checks = {c.layers_executed * 100 + c.checks: c for c in check_anchors(cost_model, TABLE_ANCHORS)}
    row = checks[32 * 100 + 16]
    assert row.predicted_ms == pytest.approx(459.4, abs=1e-6)
    assert row.consistent is False
    assert checks[32 * 100].consistent is True
    assert checks[16 * 100 + 1].consistent is True


def test_two_point_fit_is_exact():
    """Anchors (1, 0, c) and (2, 0, 2c - f) recover f and c - f."""
    fixed, per_layer = 3.0, 7.5
    anchors = [
        LatencyAnchor(layers_executed=1, total_ms=fixed + per_layer),
        LatencyAnchor(layers_executed=2, total_ms=fixed + 2 * per_layer),
    ]
    model = fit_cost_model(anchors, metric_ms=0, feature_ms=0, head_ms=0)
    assert model.fixed_ms == pytest.approx(fixed)
    assert model.per_layer_ms == pytest.approx(per_layer)


@pytest.mark.parametrize(
    "anchors",
    [
        [LatencyAnchor(layers_executed=32, total_ms=381.0)],
        [LatencyAnchor(layers_executed=32, total_ms=381.0), LatencyAnchor(layers_executed=32, checks=1, total_ms=390)],
        [LatencyAnchor(layers_executed=1, total_ms=100.0), LatencyAnchor(layers_executed=2, total_ms=50.0)],
    ],
)
def test_degenerate_anchors(anchors):
    """Single depth, or a fit implying negative costs → DegenerateAnchorsError."""
    with pytest.raises(DegenerateAnchorsError):
        fit_cost_model(anchors, metric_ms=0, feature_ms=0, head_ms=0)


# ----------------------------------------------------------------------
# Latency and sparsity
# ----------------------------------------------------------------------


def test_latency_matches_rows(cost_model, reference):
    assert latency(outcome(32, 0, reference), cost_model) == pytest.approx(381.0)
    assert latency(outcome(16, 1, reference), cost_model) == pytest.approx(203.0, abs=0.5)
    assert baseline_latency(cost_model, 32) == pytest.approx(381.0)


def test_zero_cost_model(reference):
    model = CostModel(fixed_ms=0, per_layer_ms=0)
    assert latency(outcome(20, 4, reference), model) == 0.0


def test_latency_is_monotone(cost_model):
    """Non-decreasing in exit layer and in check count."""
    values = [[predict_ms(cost_model, layer, checks) for checks in range(5)] for layer in range(1, 33)]
    for row in values:
        assert row == sorted(row)
    for col in zip(*values):
        assert list(col) == sorted(col)


@pytest.mark.parametrize("exit_layer, expected", [(32, 0.0), (16, 50.0), (24, 25.0), (13, 59.375)])
def test_sparsity(reference, exit_layer, expected):
    assert sparsity(outcome(exit_layer, 1, reference)) == pytest.approx(expected)


def test_mean_sparsity_of_depth_23_04(reference):
    """
    25 outcomes: 24 at layer 23, one at 24 → mean depth 23.04.

    Expect:
    - mean sparsity 28.0 ± 0.1
    """
    layers = [23] * 24 + [24]
    mean = sum(sparsity(outcome(layer, 1, reference)) for layer in layers) / len(layers)
    assert mean == pytest.approx(28.0, abs=0.1)


def test_sparsity_rejects_exit_beyond_depth(reference):
    with pytest.raises(ValueError):
        sparsity(outcome(20, 1, reference), total_layers=16)


def test_speedup_pct():
    assert speedup_pct(190.5, 381.0) == pytest.approx(50.0)
    assert speedup_pct(400.0, 381.0) < 0
    assert speedup_pct(1.0, 0.0) == 0.0


# ----------------------------------------------------------------------
# Cost-model file
# ----------------------------------------------------------------------


def test_load_cost_model_merges_defaults(tmp_path):
    path = tmp_path / "cost.json"
    path.write_text(json.dumps({"per_layer_ms": 10.0, "head_ms": 0.0}))
    model = load_cost_model(path)
    assert model.per_layer_ms == 10.0
    assert model.check_ms == pytest.approx(0.9)
    assert model.fixed_ms == pytest.approx(15.2)


@pytest.mark.parametrize("payload", [{"per_layer_ms": -1.0}, {"unknown_ms": 1.0}])
def test_load_cost_model_rejects_bad_fields(tmp_path, payload):
    path = tmp_path / "cost.json"
    path.write_text(json.dumps(payload))
    with pytest.raises(ValidationError):
        load_cost_model(path)


def test_load_cost_model_none_is_default(cost_model):
    assert load_cost_model(None) == cost_model
