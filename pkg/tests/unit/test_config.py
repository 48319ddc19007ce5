import json
import logging

import pytest
from pydantic import ValidationError

from src.conf.config import Settings
from src.core.log_config import setup_logging

# Run with: pytest tests/unit/test_config.py -v

pytestmark = pytest.mark.unit


def test_defaults(monkeypatch):
    """
    No environment overrides.

    Expect:
    - 32 layers, 6 points at 0.5 s, start 13, δ 1.0
    - check cost 0.2 + 0.7 + 4.0
    """
    for key in ("ACTION_EXIT_TOTAL_LAYERS", "ACTION_EXIT_DELTA_M", "ACTION_EXIT_START_LAYER"):
        monkeypatch.delenv(key, raising=False)
    s = Settings(_env_file=None)
    assert (s.TOTAL_LAYERS, s.HORIZON_T, s.DT_S) == (32, 6, 0.5)
    assert (s.START_LAYER, s.DELTA_M, s.FIXED_DEPTH) == (13, 1.0, 24)
    assert (s.METRIC_MS, s.FEATURE_MS, s.HEAD_MS) == (0.2, 0.7, 4.0)
    assert s.REPORT_HORIZONS_S == [1.0, 2.0, 3.0]


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("ACTION_EXIT_DELTA_M", "2.0")
    monkeypatch.setenv("ACTION_EXIT_LOG_LEVEL", "debug")
    monkeypatch.setenv("ACTION_EXIT_REPORT_HORIZONS_S", "[1, 2]")
    s = Settings(_env_file=None)
    assert s.DELTA_M == 2.0
    assert s.LOG_LEVEL == "DEBUG"
    assert s.REPORT_HORIZONS_S == [1.0, 2.0]


@pytest.mark.parametrize(
    "key, value",
    [
        ("ACTION_EXIT_LOG_LEVEL", "chatty"),
        ("ACTION_EXIT_TOTAL_LAYERS", "0"),
        ("ACTION_EXIT_DT_S", "-0.5"),
        ("ACTION_EXIT_HEAD_MS", "-1"),
    ],
)
def test_invalid_values_rejected(monkeypatch, key, value):
    monkeypatch.setenv(key, value)
    with pytest.raises(ValidationError):
        Settings(_env_file=None)


def test_suffix_gets_a_dot(monkeypatch):
    monkeypatch.setenv("ACTION_EXIT_TRACE_SUFFIX", "txt")
    assert Settings(_env_file=None).TRACE_SUFFIX == ".txt"


# ----------------------------------------------------------------------
# Logging
# ----------------------------------------------------------------------


def test_json_logging_to_stderr(capsys):
    """
    JSON mode.

    Expect:
    - one JSON object per record on stderr, nothing on stdout
    """
    setup_logging("INFO", json_output=True)
    logging.getLogger("src.services.harness").info("Evaluated 4 scenarios")
    captured = capsys.readouterr()
    assert captured.out == ""
    record = json.loads(captured.err.strip().splitlines()[-1])
    assert record["message"] == "Evaluated 4 scenarios"
    assert record["levelname"] == "INFO"
    assert record["name"] == "src.services.harness"


def test_plain_logging_and_replacement(capsys):
    """Calling setup twice keeps a single handler; plain mode is not JSON."""
    setup_logging("INFO", json_output=True)
    setup_logging("WARNING", json_output=False)
    root = logging.getLogger()
    assert sum(getattr(h, "_action_exit", False) for h in root.handlers) == 1
    logging.getLogger("x").warning("plain line")
    err = capsys.readouterr().err
    assert "WARNING x: plain line" in err
