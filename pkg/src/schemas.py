import math
import re
from typing import Any, Dict, Iterable, List, Optional, Tuple

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_serializer,
    field_validator,
    model_validator,
)

from src.core.exceptions import HorizonError, PolicyError
from src.models.policies import MetricKind, PolicyKind


METRIC_REGEX = re.compile(r"^l2@(?P<horizon>\d+(?:\.\d+)?)s?$")

#: 2**64 - 1, the largest seed accepted by the synthetic generators.
MAX_SEED = (1 << 64) - 1


# -------- TRAJECTORY ----------
class Waypoint(BaseModel):
    """
    Ego-centric planar position in meters.

    :ivar x: Longitudinal coordinate (m).
    :vartype x: float
    :ivar y: Lateral coordinate (m).
    :vartype y: float
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    x: float
    y: float


class Trajectory(BaseModel):
    """
    Time-indexed sequence of 2D waypoints over a fixed planning horizon.

    Points are stored as an immutable ``(T, 2)`` float array. Index ``t``
    (1-based) sits at horizon time ``t * dt``, so ``L2@2s`` with
    ``dt = 0.5`` reads the 4th point.

    :ivar xy: Waypoint coordinates, shape ``(T, 2)``, all finite.
    :vartype xy: numpy.ndarray
    :ivar dt: Seconds between consecutive points (> 0).
    :vartype dt: float

    Example::

        traj = Trajectory.from_points([(5, 0), (10, 0)], dt=0.5)
        traj.points[1]   # Waypoint(x=10.0, y=0.0)
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    xy: np.ndarray
    dt: float = Field(gt=0, allow_inf_nan=False)

    @field_validator("xy", mode="before")
    @classmethod
    def validate_xy(cls, v: Any) -> np.ndarray:
        """Coerce waypoints / pairs / arrays to a read-only finite ``(T, 2)`` array."""
        if isinstance(v, np.ndarray):
            arr = np.array(v, dtype=np.float64)
        else:
            rows = []
            for p in v:
                if isinstance(p, Waypoint):
                    rows.append((p.x, p.y))
                elif isinstance(p, dict):
                    rows.append((p["x"], p["y"]))
                else:
                    rows.append(tuple(p))
            arr = np.array(rows, dtype=np.float64)

        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError(f"points must have shape (T, 2), got {arr.shape}")
        if arr.shape[0] < 1:
            raise ValueError("trajectory needs at least one point")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coordinates must be finite")

        arr.setflags(write=False)
        return arr

    @field_serializer("xy")
    def serialize_xy(self, xy: np.ndarray) -> List[List[float]]:
        return xy.tolist()

    @classmethod
    def from_points(cls, points: Iterable[Any], dt: float) -> "Trajectory":
        return cls(xy=list(points), dt=dt)

    # --- Value semantics ---
    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Trajectory):
            return NotImplemented
        return self.dt == other.dt and np.array_equal(self.xy, other.xy)

    def __hash__(self) -> int:
        return hash((self.dt, self.xy.tobytes()))

    def __len__(self) -> int:
        return int(self.xy.shape[0])

    @property
    def points(self) -> Tuple[Waypoint, ...]:
        return tuple(Waypoint(x=float(x), y=float(y)) for x, y in self.xy)

    @property
    def span_s(self) -> float:
        """Horizon time of the last point (``T * dt``)."""
        return len(self) * self.dt

    def horizon_index(self, horizon_s: float) -> int:
        """
        1-based point index addressed by a horizon time.

        The horizon is rounded half-up to the nearest multiple of ``dt``.

        :param horizon_s: Horizon time in seconds.
        :type horizon_s: float
        :raises HorizonError: If the rounded index falls outside ``[1, T]``.
        :return: Index ``t`` with ``1 <= t <= T``.
        :rtype: int
        """

        if not math.isfinite(horizon_s) or horizon_s <= 0:
            raise HorizonError(horizon_s, self.span_s, self.dt)
        t = math.floor(horizon_s / self.dt + 0.5)
        if t < 1 or t > len(self):
            raise HorizonError(horizon_s, self.span_s, self.dt)
        return t

    # --- Rigid transforms ---
    def translate(self, dx: float, dy: float) -> "Trajectory":
        return Trajectory(xy=self.xy + np.array([dx, dy]), dt=self.dt)

    def scale(self, k: float) -> "Trajectory":
        return Trajectory(xy=self.xy * k, dt=self.dt)

    def rotate_about(self, pivot: Tuple[float, float], angle: float) -> "Trajectory":
        c, s = math.cos(angle), math.sin(angle)
        rot = np.array([[c, -s], [s, c]])
        origin = np.asarray(pivot, dtype=np.float64)
        return Trajectory(xy=(self.xy - origin) @ rot.T + origin, dt=self.dt)


class DissimilarityScore(BaseModel):
    """
    Spatial deviation between a predicted trajectory and a reference, in meters.

    :ivar value: Nonnegative distance (m).
    :vartype value: float
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    value: float = Field(ge=0)

    def __float__(self) -> float:
        return self.value


class Tolerance(BaseModel):
    """
    Deviation threshold below which an intermediate trajectory is accepted.

    :ivar delta: Tolerance in meters (> 0).
    :vartype delta: float
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    delta: float = Field(gt=0)


# -------- EXIT POLICY ----------
class ExitMetric(BaseModel):
    """
    Metric driving the exit predicate.

    :ivar kind: ``mean_l2`` (mean over all points) or ``l2_at`` (one horizon).
    :vartype kind: MetricKind
    :ivar horizon_s: Horizon in seconds, required for ``l2_at``.
    :vartype horizon_s: float | None

    Example::

        ExitMetric.parse("l2@2s")    # kind=l2_at, horizon_s=2.0
        ExitMetric.parse("mean-l2")  # kind=mean_l2
    """

    model_config = ConfigDict(frozen=True)

    kind: MetricKind = MetricKind.l2_at
    horizon_s: Optional[float] = Field(default=2.0, gt=0, allow_inf_nan=False)

    @model_validator(mode="before")
    @classmethod
    def drop_mean_horizon(cls, data: Any) -> Any:
        # mean L2 has no horizon; keeps echoes of equal metrics identical
        if isinstance(data, dict) and data.get("kind") == MetricKind.mean_l2:
            return {**data, "horizon_s": None}
        return data

    @model_validator(mode="after")
    def check_horizon(self) -> "ExitMetric":
        if self.kind is MetricKind.l2_at and self.horizon_s is None:
            raise ValueError("l2_at metric needs horizon_s")
        return self

    @classmethod
    def parse(cls, text: str) -> "ExitMetric":
        value = text.strip().lower()
        if value in ("mean", "mean-l2", "mean_l2"):
            return cls(kind=MetricKind.mean_l2, horizon_s=None)
        match = METRIC_REGEX.match(value)
        if not match:
            raise ValueError(f"unknown metric {text!r} (use 'mean-l2' or 'l2@<t>s')")
        return cls(kind=MetricKind.l2_at, horizon_s=float(match["horizon"]))

    def __str__(self) -> str:
        if self.kind is MetricKind.mean_l2:
            return "mean-l2"
        return f"l2@{self.horizon_s:g}s"


class ExitPolicy(BaseModel):
    """
    Configuration of one exit strategy.

    :ivar kind: Policy kind (multi-hop, full scan, fixed depth, no exit).
    :vartype kind: PolicyKind
    :ivar delta: Tolerance; required for ``multihop`` and ``fullscan``.
    :vartype delta: Tolerance | None
    :ivar start_layer: First layer checked (1-based, default 13).
    :vartype start_layer: int
    :ivar fixed_depth: Exit layer for ``fixed`` policies.
    :vartype fixed_depth: int | None
    :ivar metric: Metric evaluated at each check.
    :vartype metric: ExitMetric
    :ivar label: Optional display name (ablation tables).
    :vartype label: str | None
    """

    model_config = ConfigDict(frozen=True)

    kind: PolicyKind = PolicyKind.multihop
    delta: Optional[Tolerance] = None
    start_layer: int = Field(default=13, ge=1)
    fixed_depth: Optional[int] = Field(default=None, ge=1)
    metric: ExitMetric = Field(default_factory=ExitMetric)
    label: Optional[str] = None

    @field_validator("delta", mode="before")
    @classmethod
    def coerce_delta(cls, v: Any) -> Any:
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            return Tolerance(delta=float(v))
        return v

    @model_validator(mode="after")
    def check_kind_fields(self) -> "ExitPolicy":
        if self.kind in (PolicyKind.multihop, PolicyKind.fullscan) and self.delta is None:
            raise ValueError(f"{self.kind.value} policy needs a tolerance delta")
        if self.kind is PolicyKind.fixed and self.fixed_depth is None:
            raise ValueError("fixed policy needs fixed_depth")
        return self

    @classmethod
    def parse_kind(cls, text: str) -> PolicyKind:
        aliases = {
            "multihop": PolicyKind.multihop,
            "multi-hop": PolicyKind.multihop,
            "fullscan": PolicyKind.fullscan,
            "full-scan": PolicyKind.fullscan,
            "fixed": PolicyKind.fixed,
            "fixed-depth": PolicyKind.fixed,
            "noexit": PolicyKind.noexit,
            "no-exit": PolicyKind.noexit,
        }
        try:
            return aliases[text.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown policy {text!r}") from None

    def validate_for(self, total_layers: int) -> None:
        """
        Check the policy against a planner depth.

        :param total_layers: Number of decoder layers ``L``.
        :type total_layers: int
        :raises PolicyError: If start layer or fixed depth exceed ``L``.
        """

        if self.kind in (PolicyKind.multihop, PolicyKind.fullscan) and self.start_layer > total_layers:
            raise PolicyError(
                f"start_layer {self.start_layer} exceeds total layers {total_layers}",
                start_layer=self.start_layer,
                total_layers=total_layers,
            )
        if self.kind is PolicyKind.fixed and self.fixed_depth > total_layers:
            raise PolicyError(
                f"fixed_depth {self.fixed_depth} exceeds total layers {total_layers}",
                fixed_depth=self.fixed_depth,
                total_layers=total_layers,
            )

    @property
    def display_name(self) -> str:
        if self.label:
            return self.label
        if self.kind is PolicyKind.fixed:
            return f"fixed@L{self.fixed_depth}"
        if self.kind is PolicyKind.noexit:
            return "noexit"
        return f"{self.kind.value}(delta={self.delta.delta:g}, start=L{self.start_layer}, {self.metric})"


class ExitOutcome(BaseModel):
    """
    Result of running one exit policy on one scenario.

    :ivar exit_layer: Layer whose trajectory was adopted.
    :vartype exit_layer: int
    :ivar checked_layers: Layers where the predicate was evaluated, increasing.
    :vartype checked_layers: tuple[int, ...]
    :ivar scores: Score observed at each checked layer, in check order.
    :vartype scores: tuple[float, ...]
    :ivar exit_score: Dissimilarity at ``exit_layer``.
    :vartype exit_score: DissimilarityScore
    :ivar adopted: Adopted trajectory.
    :vartype adopted: Trajectory
    :ivar exited_early: False when inference ran to the final layer.
    :vartype exited_early: bool
    :ivar total_layers: Planner depth ``L``.
    :vartype total_layers: int
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    exit_layer: int = Field(ge=1)
    checked_layers: Tuple[int, ...] = ()
    scores: Tuple[float, ...] = ()
    exit_score: DissimilarityScore
    adopted: Trajectory
    exited_early: bool
    total_layers: int = Field(ge=1)

    @model_validator(mode="after")
    def check_walk(self) -> "ExitOutcome":
        layers = self.checked_layers
        if any(b <= a for a, b in zip(layers, layers[1:])):
            raise ValueError(f"checked_layers must be strictly increasing: {layers}")
        if layers and layers[-1] != self.exit_layer:
            raise ValueError("exit_layer must be the last checked layer")
        if self.scores and len(self.scores) != len(layers):
            raise ValueError("one score per checked layer expected")
        if self.exit_layer > self.total_layers:
            raise ValueError("exit_layer exceeds total_layers")
        if not self.exited_early and self.exit_layer != self.total_layers:
            raise ValueError("fall-through outcome must adopt the final layer")
        return self

    @property
    def checks(self) -> int:
        return len(self.checked_layers)


# -------- COST MODEL ----------
class CostModel(BaseModel):
    """
    Linear latency model in milliseconds.

    ``latency = fixed_ms + per_layer_ms * exit_layer + check_ms * checks``
    where ``check_ms = metric_ms + feature_ms + head_ms``.

    :ivar fixed_ms: Depth-independent pipeline cost.
    :vartype fixed_ms: float
    :ivar per_layer_ms: Cost of one executed decoder layer.
    :vartype per_layer_ms: float
    :ivar metric_ms: Planning-metric evaluation per check.
    :vartype metric_ms: float
    :ivar feature_ms: Intermediate feature extraction per check.
    :vartype feature_ms: float
    :ivar head_ms: Action-head projection per check.
    :vartype head_ms: float
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False, extra="forbid")

    fixed_ms: float = Field(ge=0)
    per_layer_ms: float = Field(ge=0)
    metric_ms: float = Field(default=0.0, ge=0)
    feature_ms: float = Field(default=0.0, ge=0)
    head_ms: float = Field(default=0.0, ge=0)

    @property
    def check_ms(self) -> float:
        return self.metric_ms + self.feature_ms + self.head_ms


class LatencyAnchor(BaseModel):
    """
    One measured latency row used for calibration.

    :ivar layers_executed: Decoder layers executed (exit layer).
    :vartype layers_executed: int
    :ivar checks: Exit checks performed.
    :vartype checks: int
    :ivar total_ms: Measured end-to-end latency.
    :vartype total_ms: float
    :ivar label: Optional row name.
    :vartype label: str | None
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    layers_executed: int = Field(ge=1)
    checks: int = Field(default=0, ge=0)
    total_ms: float = Field(ge=0)
    label: Optional[str] = None


class AnchorCheck(BaseModel):
    """Published latency row against the fitted model's prediction."""

    label: str
    layers_executed: int
    checks: int
    published_ms: float
    predicted_ms: float
    residual_ms: float
    consistent: bool


# -------- KINEMATICS ----------
class ControlSample(BaseModel):
    """
    One control step of the bicycle model.

    :ivar speed: Speed command (m/s, >= 0).
    :vartype speed: float
    :ivar steering_angle: Front-wheel angle (rad), ``|angle| < pi/2``.
    :vartype steering_angle: float
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    speed: float = Field(ge=0)
    steering_angle: float = 0.0

    @field_validator("steering_angle")
    @classmethod
    def validate_steering(cls, v: float) -> float:
        if not abs(v) < math.pi / 2:
            raise ValueError("steering angle must satisfy |angle| < pi/2")
        return v


class VehicleState(BaseModel):
    """
    Planar pose of the rear axle plus vehicle geometry.

    :ivar x: Position (m).
    :vartype x: float
    :ivar y: Position (m).
    :vartype y: float
    :ivar heading: Heading (rad), normalized to ``(-pi, pi]``.
    :vartype heading: float
    :ivar wheelbase: Axle distance (m, > 0).
    :vartype wheelbase: float
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0
    wheelbase: float = Field(default=2.8, gt=0)

    @field_validator("heading")
    @classmethod
    def normalize_heading(cls, v: float) -> float:
        h = math.remainder(v, 2 * math.pi)
        return math.pi if h <= -math.pi else h


# -------- TRACES ----------
class ScenarioTrace(BaseModel):
    """
    Per-layer trajectories of one driving case plus its reference prior.

    :ivar scenario_id: File-name safe identifier (letters, digits, ``._-``).
    :vartype scenario_id: str
    :ivar total_layers: Decoder depth ``L``.
    :vartype total_layers: int
    :ivar reference: Reference prior trajectory.
    :vartype reference: Trajectory
    :ivar per_layer: ``L`` trajectories, index ``l - 1`` holds layer ``l``.
    :vartype per_layer: tuple[Trajectory, ...]
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    scenario_id: str = Field(min_length=1, pattern=r"^[A-Za-z0-9._-]+$")
    total_layers: int = Field(ge=1)
    reference: Trajectory
    per_layer: Tuple[Trajectory, ...]

    @model_validator(mode="after")
    def check_layers(self) -> "ScenarioTrace":
        if len(self.per_layer) != self.total_layers:
            raise ValueError(
                f"count mismatch: total_layers={self.total_layers} "
                f"but {len(self.per_layer)} layer trajectories"
            )
        T, dt = len(self.reference), self.reference.dt
        for layer, traj in enumerate(self.per_layer, start=1):
            if len(traj) != T:
                raise ValueError(f"shape mismatch at layer {layer}: length {len(traj)} != {T}")
            if traj.dt != dt:
                raise ValueError(f"shape mismatch at layer {layer}: dt {traj.dt} != {dt}")
        return self

    @property
    def horizon_T(self) -> int:
        return len(self.reference)

    @property
    def dt(self) -> float:
        return self.reference.dt

    def layer(self, layer: int) -> Trajectory:
        if not 1 <= layer <= self.total_layers:
            raise IndexError(f"layer {layer} outside [1, {self.total_layers}]")
        return self.per_layer[layer - 1]


class SyntheticProfile(BaseModel):
    """
    Shape of a synthetic dissimilarity-vs-depth curve.

    ``d(l) = base_scale * exp(-decay_rate * l) + floor + noise(l)``, plus
    ``divergence_slope * (l - divergence_layer)`` past the divergence layer.

    :ivar base_scale: Initial magnitude ``a`` (m).
    :vartype base_scale: float
    :ivar decay_rate: Per-layer decay ``b``.
    :vartype decay_rate: float
    :ivar floor: Asymptote ``c`` (m).
    :vartype floor: float
    :ivar noise_sd: Gaussian noise standard deviation (m).
    :vartype noise_sd: float
    :ivar divergence_layer: Layer after which the curve grows again.
    :vartype divergence_layer: int | None
    :ivar divergence_slope: Growth per layer past the divergence layer (m).
    :vartype divergence_slope: float
    :ivar seed: Unsigned 64-bit seed.
    :vartype seed: int
    :ivar ref_speed: Speed of the straight reference (m/s).
    :vartype ref_speed: float
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    base_scale: float = Field(default=20.0, ge=0)
    decay_rate: float = Field(default=0.15, ge=0)
    floor: float = Field(default=0.0, ge=0)
    noise_sd: float = Field(default=0.0, ge=0)
    divergence_layer: Optional[int] = Field(default=None, ge=1)
    divergence_slope: float = Field(default=0.0, ge=0)
    seed: int = Field(default=0, ge=0, le=MAX_SEED)
    ref_speed: float = Field(default=10.0, gt=0)


# -------- REPORTS ----------
class ScenarioRow(BaseModel):
    """
    One evaluated scenario.

    ``l2_at`` maps horizon labels (``"1s"``, ``"2s"`` …, plus ``"avg"``) to the
    distance between adopted trajectory and reference.
    """

    scenario_id: str
    exit_layer: int
    checks: int
    exit_score: float
    latency_ms: float
    sparsity_pct: float
    exited_early: bool
    l2_at: Dict[str, float]


class ColumnSummary(BaseModel):
    """Mean / median / 95th percentile of one report column."""

    mean: float
    p50: float
    p95: float


class Report(BaseModel):
    """
    Evaluation of one policy over one dataset.

    :ivar policy: Echo of the evaluated policy.
    :vartype policy: ExitPolicy
    :ivar cost_model: Echo of the cost model.
    :vartype cost_model: CostModel
    :ivar dataset_digest: SHA-256 over trace file names and contents.
    :vartype dataset_digest: str
    :ivar scenario_count: Number of evaluated scenarios.
    :vartype scenario_count: int
    :ivar total_layers: Shared depth of the dataset.
    :vartype total_layers: int
    :ivar baseline_latency_ms: Latency without early exit.
    :vartype baseline_latency_ms: float
    :ivar exited_early_pct: Share of scenarios exiting before the final layer.
    :vartype exited_early_pct: float
    :ivar per_scenario: One row per scenario in dataset order.
    :vartype per_scenario: list[ScenarioRow]
    :ivar aggregate: Column summaries keyed by column name.
    :vartype aggregate: dict[str, ColumnSummary]
    :ivar exit_histogram: Exit layer -> count, sorted by layer.
    :vartype exit_histogram: dict[int, int]
    """

    policy: ExitPolicy
    cost_model: CostModel
    dataset_digest: str
    scenario_count: int
    total_layers: int
    baseline_latency_ms: float
    exited_early_pct: float
    per_scenario: List[ScenarioRow]
    aggregate: Dict[str, ColumnSummary]
    exit_histogram: Dict[int, int]

    @model_validator(mode="after")
    def check_histogram(self) -> "Report":
        if sum(self.exit_histogram.values()) != self.scenario_count:
            raise ValueError("histogram counts must sum to the scenario count")
        return self


class OracleSummary(BaseModel):
    """
    Outcome of the multi-hop vs full-scan equivalence sweep.

    :ivar n: Traces generated.
    :vartype n: int
    :ivar agree: Traces where both exit at the same layer.
    :vartype agree: int
    :ivar dominate: Traces where multi-hop used no more checks than full scan.
    :vartype dominate: int
    :ivar first_disagreement: Seed of the first disagreeing trace, if any.
    :vartype first_disagreement: int | None
    """

    n: int
    agree: int
    dominate: int
    first_disagreement: Optional[int] = None

    @property
    def passed(self) -> bool:
        return self.agree == self.n and self.dominate == self.n
