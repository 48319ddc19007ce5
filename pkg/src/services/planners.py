import logging
import math
from typing import Dict, List, Mapping, Optional, Protocol, Sequence, runtime_checkable

import numpy as np

from src.core.exceptions import DistributionError, ProfileError
from src.schemas import (
    ControlSample,
    ScenarioTrace,
    SyntheticProfile,
    Tolerance,
    Trajectory,
    VehicleState,
)
from src.services.kinematics import rollout_bicycle


logger = logging.getLogger(__name__)

#: Earliest layer with L2@2s < 2 m to the final trajectory, counted over 640
#: driving cases of a 32-layer planner.
EARLY_EXIT_COUNTS: Dict[int, int] = {
    7: 1, 9: 1,
    13: 26, 14: 28, 15: 18, 16: 16,
    17: 3, 18: 5, 19: 8, 20: 4, 21: 8, 22: 6, 23: 8, 24: 43,
    25: 146, 26: 1, 27: 26, 28: 32, 29: 26, 30: 3, 31: 5, 32: 226,
}  # fmt: skip

#: Same counts normalized by their total (sums to 1).
EARLY_EXIT_DISTRIBUTION: Dict[int, float] = {
    layer: count / sum(EARLY_EXIT_COUNTS.values()) for layer, count in EARLY_EXIT_COUNTS.items()
}


# -------- PLANNER INTERFACE ----------
@runtime_checkable
class LayerwisePlanner(Protocol):
    """
    Anything that can decode a trajectory after a given decoder layer.

    ``decode`` must be deterministic and may be called for any increasing
    subset of ``1..total_layers``.
    """

    @property
    def total_layers(self) -> int: ...

    def decode(self, layer: int) -> Trajectory: ...


class TracePlanner:
    """
    Replays the per-layer trajectories of a recorded :class:`ScenarioTrace`.

    Every decode is recorded in :attr:`decoded_layers`, so callers can
    verify which layers were actually decoded.

    Example::

        planner = TracePlanner(trace)
        planner.decode(13)
        planner.decoded_layers   # [13]
    """

    def __init__(self, trace: ScenarioTrace):
        self.trace = trace
        self.decoded_layers: List[int] = []

    @property
    def total_layers(self) -> int:
        return self.trace.total_layers

    @property
    def reference(self) -> Trajectory:
        return self.trace.reference

    def decode(self, layer: int) -> Trajectory:
        self.decoded_layers.append(layer)
        return self.trace.layer(layer)


# -------- RANDOM SOURCE ----------
def make_rng(seed: int) -> np.random.Generator:
    """
    Project random source: numpy ``Generator`` over the counter-based Philox
    bit generator. Fixed so seeded outputs stay stable across releases.
    """
    return np.random.Generator(np.random.Philox(seed))


# -------- TRACE BUILDERS ----------
def _check_shape(total_layers: int, horizon_T: int, dt: float) -> None:
    if total_layers < 1:
        raise ProfileError(f"total_layers must be >= 1, got {total_layers}")
    if horizon_T < 1:
        raise ProfileError(f"horizon_T must be >= 1, got {horizon_T}")
    if not (math.isfinite(dt) and dt > 0):
        raise ProfileError(f"dt must be > 0, got {dt}")


def straight_reference(horizon_T: int, dt: float, speed: float = 10.0) -> Trajectory:
    """Straight constant-speed reference along +x: point ``t`` at ``(speed*t*dt, 0)``."""
    t = np.arange(1, horizon_T + 1, dtype=np.float64)
    return Trajectory(xy=np.column_stack([speed * dt * t, np.zeros(horizon_T)]), dt=dt)


def scenario_from_curve(
    scenario_id: str,
    curve: Sequence[float],
    horizon_T: int = 6,
    dt: float = 0.5,
    ref_speed: float = 10.0,
) -> ScenarioTrace:
    """
    Build a trace whose dissimilarity at layer ``l`` equals ``curve[l - 1]``.

    Each layer trajectory is the straight reference shifted laterally by the
    target distance, so mean L2 and L2 at any horizon both measure exactly
    that distance.

    :param scenario_id: Identifier of the scenario.
    :type scenario_id: str
    :param curve: Nonnegative dissimilarity per layer (m), one per layer.
    :type curve: Sequence[float]
    :raises ProfileError: If the curve is empty, negative or not finite.
    :return: Trace with ``len(curve)`` layers.
    :rtype: ScenarioTrace
    """
    d = np.asarray(curve, dtype=np.float64)
    if d.ndim != 1 or d.size == 0:
        raise ProfileError("curve needs at least one layer")
    if not np.all(np.isfinite(d)) or np.any(d < 0):
        raise ProfileError("curve values must be finite and >= 0")
    _check_shape(d.size, horizon_T, dt)

    reference = straight_reference(horizon_T, dt, ref_speed)
    per_layer = tuple(
        Trajectory(xy=reference.xy + np.array([0.0, offset]), dt=dt) for offset in d
    )
    return ScenarioTrace(
        scenario_id=scenario_id,
        total_layers=d.size,
        reference=reference,
        per_layer=per_layer,
    )


def profile_curve(profile: SyntheticProfile, total_layers: int) -> np.ndarray:
    """
    Closed-form dissimilarity curve of a profile, noise included.

    ``d(l) = a*exp(-b*l) + c + noise(l) [+ slope*(l - divergence_layer) for l > divergence_layer]``,
    clipped at zero.
    """
    layers = np.arange(1, total_layers + 1, dtype=np.float64)
    d = profile.base_scale * np.exp(-profile.decay_rate * layers) + profile.floor
    if profile.noise_sd > 0:
        d = d + make_rng(profile.seed).normal(0.0, profile.noise_sd, size=total_layers)
    if profile.divergence_layer is not None:
        d = d + profile.divergence_slope * np.maximum(0.0, layers - profile.divergence_layer)
    return np.maximum(d, 0.0)


def generate_scenario(
    profile: SyntheticProfile,
    total_layers: int = 32,
    horizon_T: int = 6,
    dt: float = 0.5,
    scenario_id: Optional[str] = None,
) -> ScenarioTrace:
    """
    Synthesize a trace following an exponential convergence profile.

    :param profile: Curve shape and seed.
    :type profile: SyntheticProfile
    :param total_layers: Decoder depth ``L``.
    :type total_layers: int
    :param horizon_T: Points per trajectory.
    :type horizon_T: int
    :param dt: Seconds between points.
    :type dt: float
    :param scenario_id: Identifier; defaults to ``synthetic-<seed>``.
    :type scenario_id: str | None
    :raises ProfileError: On invalid shape parameters.
    :return: Deterministic trace for the given profile and shape.
    :rtype: ScenarioTrace

    Example (diverging case, dips below 2 m then ends above 10 m)::

        profile = SyntheticProfile(base_scale=20, decay_rate=0.15,
                                   divergence_layer=25, divergence_slope=1.5)
        trace = generate_scenario(profile)
    """
    _check_shape(total_layers, horizon_T, dt)
    curve = profile_curve(profile, total_layers)
    return scenario_from_curve(
        scenario_id or f"synthetic-{profile.seed}",
        curve,
        horizon_T=horizon_T,
        dt=dt,
        ref_speed=profile.ref_speed,
    )


def lipschitz_curve(seed: int, delta: float, total_layers: int) -> np.ndarray:
    """
    Random dissimilarity curve whose per-layer decrease never exceeds ``delta``.

    - Start value uniform in ``[0, 20*delta)``.
    - Each step decreases by ``U[0, delta)`` or, with probability 0.15,
      increases by ``U[0, 2*delta)``.
    - Values are floored at zero (flooring only shrinks a decrease).
    """
    rng = make_rng(seed)
    d = np.empty(total_layers, dtype=np.float64)
    d[0] = rng.uniform(0.0, 20.0 * delta)
    for i in range(1, total_layers):
        if rng.random() < 0.15:
            d[i] = d[i - 1] + rng.uniform(0.0, 2.0 * delta)
        else:
            d[i] = max(d[i - 1] - rng.uniform(0.0, delta), 0.0)
    return d


def generate_lipschitz_scenario(
    seed: int,
    delta: Tolerance | float,
    total_layers: int = 32,
    horizon_T: int = 6,
    dt: float = 0.5,
) -> ScenarioTrace:
    """
    Synthesize a bounded-decrease trace for the multi-hop equivalence suite.

    :param seed: Random seed (unsigned 64-bit).
    :type seed: int
    :param delta: Tolerance bounding the per-layer decrease.
    :type delta: Tolerance | float
    :return: Trace with ``d(l) - d(l+1) <= delta`` at every layer.
    :rtype: ScenarioTrace
    """
    tol = delta if isinstance(delta, Tolerance) else Tolerance(delta=delta)
    _check_shape(total_layers, horizon_T, dt)
    curve = lipschitz_curve(seed, tol.delta, total_layers)
    return scenario_from_curve(f"lipschitz-{seed}", curve, horizon_T=horizon_T, dt=dt)


def exit_curve(earliest_exit: Optional[int], delta: float, total_layers: int) -> np.ndarray:
    """
    Lipschitz-``delta`` curve whose first layer below ``delta`` is ``earliest_exit``.

    Decreases by ``delta / 2`` per layer and crosses the threshold between
    ``earliest_exit - 1`` (``1.25*delta``) and ``earliest_exit`` (``0.75*delta``).
    ``None`` gives a flat ``2*delta`` curve that never becomes admissible.
    """
    if earliest_exit is None:
        return np.full(total_layers, 2.0 * delta)
    if not 1 <= earliest_exit <= total_layers:
        raise ProfileError(f"earliest_exit {earliest_exit} outside [1, {total_layers}]")
    layers = np.arange(1, total_layers + 1, dtype=np.float64)
    step = delta / 2.0
    return np.maximum(delta + step * (earliest_exit - layers) - step / 2.0, 0.0)


def generate_exit_scenario(
    scenario_id: str,
    earliest_exit: Optional[int],
    delta: float,
    total_layers: int = 32,
    horizon_T: int = 6,
    dt: float = 0.5,
) -> ScenarioTrace:
    """Trace whose earliest admissible layer under ``delta`` is ``earliest_exit``."""
    _check_shape(total_layers, horizon_T, dt)
    curve = exit_curve(earliest_exit, delta, total_layers)
    return scenario_from_curve(scenario_id, curve, horizon_T=horizon_T, dt=dt)


# -------- POPULATIONS ----------
def sample_population(distribution: Mapping[int, float], n: int, seed: int) -> List[int]:
    """
    Draw earliest-exit layers from a categorical distribution.

    :param distribution: Layer -> probability; must sum to 1 within 1e-9.
    :type distribution: Mapping[int, float]
    :param n: Number of samples (>= 1).
    :type n: int
    :param seed: Random seed.
    :type seed: int
    :raises DistributionError: If the distribution is empty, negative or not normalized.
    :return: ``n`` layer indices.
    :rtype: list[int]

    Example::

        layers = sample_population(EARLY_EXIT_DISTRIBUTION, n=640, seed=7)
    """
    if n < 1:
        raise DistributionError(f"n must be >= 1, got {n}")
    if not distribution:
        raise DistributionError("empty distribution")

    layers = sorted(distribution)
    probs = np.array([distribution[layer] for layer in layers], dtype=np.float64)
    if any(int(layer) != layer or layer < 1 for layer in layers):
        raise DistributionError("layers must be positive integers")
    if not np.all(np.isfinite(probs)) or np.any(probs < 0):
        raise DistributionError("probabilities must be finite and >= 0")
    total = float(probs.sum())
    if abs(total - 1.0) > 1e-9:
        raise DistributionError(f"probabilities sum to {total!r}, expected 1", total=total)

    draws = make_rng(seed).choice(np.array(layers, dtype=np.int64), size=n, p=probs / total)
    return [int(layer) for layer in draws]


def generate_population(
    distribution: Mapping[int, float],
    n: int,
    seed: int,
    delta: float = 2.0,
    total_layers: int = 32,
    horizon_T: int = 6,
    dt: float = 0.5,
) -> List[ScenarioTrace]:
    """
    Replayable population whose earliest-exit layers follow ``distribution``.

    Scenario ``i`` is named ``pop-<seed>-<i>`` and exits first at the
    ``i``-th sampled layer under ``delta``.
    """
    if max(distribution, default=0) > total_layers:
        raise ProfileError(f"distribution has layers beyond total_layers={total_layers}")
    layers = sample_population(distribution, n, seed)
    logger.info(f"Sampled {n} earliest-exit layers (seed={seed})")
    return [
        generate_exit_scenario(
            f"pop-{seed}-{i:05d}", layer, delta, total_layers=total_layers, horizon_T=horizon_T, dt=dt
        )
        for i, layer in enumerate(layers)
    ]


def scenario_from_controls(
    scenario_id: str,
    controls: Sequence[ControlSample],
    dt: float,
    total_layers: int = 32,
    initial: Optional[VehicleState] = None,
    perturbation: float = 0.5,
    decay_rate: float = 0.15,
) -> ScenarioTrace:
    """
    Trace built from a control sequence through the bicycle model.

    The reference is the rollout of ``controls``; layer ``l`` rolls out the
    same speeds with steering scaled by ``1 + perturbation * exp(-decay_rate * l)``,
    so deeper layers converge to the reference path.

    :raises ControlError: On empty controls or invalid ``dt``.
    :return: Trace with ``total_layers`` layers and ``len(controls)`` points.
    :rtype: ScenarioTrace
    """
    _check_shape(total_layers, max(len(controls), 1), dt)
    initial = initial or VehicleState()
    reference = rollout_bicycle(initial, controls, dt)
    limit = math.pi / 2 - 1e-6

    per_layer = []
    for layer in range(1, total_layers + 1):
        gain = 1.0 + perturbation * math.exp(-decay_rate * layer)
        perturbed = [
            ControlSample(
                speed=c.speed,
                steering_angle=max(-limit, min(limit, c.steering_angle * gain)),
            )
            for c in controls
        ]
        per_layer.append(rollout_bicycle(initial, perturbed, dt))

    return ScenarioTrace(
        scenario_id=scenario_id,
        total_layers=total_layers,
        reference=reference,
        per_layer=tuple(per_layer),
    )
