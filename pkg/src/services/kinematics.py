import math
from typing import Sequence, Tuple

import numpy as np

from src.core.exceptions import ControlError
from src.schemas import ControlSample, Trajectory, VehicleState


def rollout_bicycle(
    initial: VehicleState,
    controls: Sequence[ControlSample],
    dt: float,
) -> Trajectory:
    """
    Integrate the kinematic bicycle model with forward Euler.

    Per step the heading is updated first, then the position uses the new
    heading::

        heading += speed / wheelbase * tan(steering) * dt
        x += speed * cos(heading) * dt
        y += speed * sin(heading) * dt

    :param initial: Starting pose and wheelbase.
    :type initial: VehicleState
    :param controls: One speed / steering command per step (nonempty).
    :type controls: Sequence[ControlSample]
    :param dt: Step length in seconds (> 0).
    :type dt: float
    :raises ControlError: If ``dt`` is not positive or ``controls`` is empty.
    :return: The ``T`` post-step positions, sampled every ``dt``.
    :rtype: Trajectory

    Example::

        >>> ctrl = [ControlSample(speed=10.0, steering_angle=0.0)] * 6
        >>> rollout_bicycle(VehicleState(), ctrl, dt=0.5).xy[:, 0].tolist()
        [5.0, 10.0, 15.0, 20.0, 25.0, 30.0]
    """
    if not (math.isfinite(dt) and dt > 0):
        raise ControlError(f"dt must be > 0, got {dt}", dt=dt)
    if len(controls) == 0:
        raise ControlError("controls must be nonempty")

    x, y, heading = initial.x, initial.y, initial.heading
    points = np.empty((len(controls), 2), dtype=np.float64)
    for i, control in enumerate(controls):
        v = control.speed
        heading += v / initial.wheelbase * math.tan(control.steering_angle) * dt
        x += v * math.cos(heading) * dt
        y += v * math.sin(heading) * dt
        points[i] = (x, y)

    return Trajectory(xy=points, dt=dt)


def rotate_points(traj: Trajectory, pivot: Tuple[float, float], angle: float) -> Trajectory:
    """Rotate every point of ``traj`` by ``angle`` radians about ``pivot``."""
    return traj.rotate_about(pivot, angle)


def turning_radius(wheelbase: float, steering_angle: float) -> float:
    """Radius ``wheelbase / tan(steering)`` of the steady-state circle (inf when straight)."""
    if steering_angle == 0.0:
        return math.inf
    return wheelbase / math.tan(abs(steering_angle))


def trajectory_from_controls(
    controls: Sequence[ControlSample],
    dt: float,
    wheelbase: float = 2.8,
) -> Trajectory:
    """Roll out ``controls`` from the origin, heading 0, with the given wheelbase."""
    return rollout_bicycle(VehicleState(wheelbase=wheelbase), controls, dt)
