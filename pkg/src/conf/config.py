from typing import Any, List

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Global project settings.

    Loads defaults for the exit controller, the synthetic generators, the
    bicycle model and the latency cost model from the environment
    (``ACTION_EXIT_`` prefix) or a local ``.env`` file, and validates them.

    Settings only provide defaults: every value that changes a report
    (policy, cost model) is echoed into the report itself.
    """

    # --- Logging ---
    LOG_LEVEL: str = "INFO"
    LOG_JSON: bool = True

    # --- Trace shape ---
    TOTAL_LAYERS: int = 32
    HORIZON_T: int = 6
    DT_S: float = 0.5  # trajectories sampled at 2 Hz
    REF_SPEED_MPS: float = 10.0

    # --- Exit policy ---
    START_LAYER: int = 13
    DELTA_M: float = 1.0
    EXIT_HORIZON_S: float = 2.0
    FIXED_DEPTH: int = 24

    # --- Kinematics ---
    WHEELBASE_M: float = 2.8

    # --- Cost model (ms) ---
    # fixed / per-layer fitted on the 381 ms and 203 ms latency rows
    FIXED_MS: float = 15.2
    PER_LAYER_MS: float = 11.43125
    METRIC_MS: float = 0.20
    FEATURE_MS: float = 0.70
    HEAD_MS: float = 4.00

    # --- Reports ---
    REPORT_HORIZONS_S: List[float] = [1.0, 2.0, 3.0]
    TRACE_SUFFIX: str = ".trace"
    WORKERS: int = 1

    # --- Pydantic v2 config ---
    model_config = SettingsConfigDict(
        extra="ignore",
        env_prefix="ACTION_EXIT_",
        env_file=".env",
        env_file_encoding="utf-8",
    )

    # --- Validators ---
    @field_validator("LOG_LEVEL")
    @classmethod
    def validate_log_level(cls, v: Any) -> str:
        level = str(v).upper()
        if level not in ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]:
            raise ValueError("LOG_LEVEL must be DEBUG, INFO, WARNING, ERROR or CRITICAL")
        return level

    @field_validator("TOTAL_LAYERS", "HORIZON_T", "START_LAYER", "FIXED_DEPTH", "WORKERS")
    @classmethod
    def validate_positive_int(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be >= 1")
        return v

    @field_validator("DT_S", "DELTA_M", "EXIT_HORIZON_S", "WHEELBASE_M")
    @classmethod
    def validate_positive_float(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("must be > 0")
        return v

    @field_validator("FIXED_MS", "PER_LAYER_MS", "METRIC_MS", "FEATURE_MS", "HEAD_MS")
    @classmethod
    def validate_cost(cls, v: float) -> float:
        if v < 0:
            raise ValueError("cost components must be >= 0")
        return v

    @field_validator("TRACE_SUFFIX")
    @classmethod
    def validate_suffix(cls, v: str) -> str:
        return v if v.startswith(".") else f".{v}"


settings = Settings()
