import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.core.exceptions import ControlError
from src.schemas import ControlSample, VehicleState
from src.services.kinematics import rollout_bicycle, rotate_points, trajectory_from_controls, turning_radius

# Run with: pytest tests/unit/test_kinematics.py -v

pytestmark = [pytest.mark.unit, pytest.mark.kinematics]

WHEELBASE = 2.8


def max_radial_deviation(alpha: float, dt: float, speed: float = 5.0) -> float:
    """Largest distance between rollout points and the analytic circle over one full turn."""
    radius = turning_radius(WHEELBASE, alpha)
    omega = speed * math.tan(alpha) / WHEELBASE
    steps = round(2 * math.pi / (omega * dt))
    controls = [ControlSample(speed=speed, steering_angle=alpha)] * steps
    traj = rollout_bicycle(VehicleState(wheelbase=WHEELBASE), controls, dt)
    center = np.array([0.0, radius])
    return float(np.max(np.abs(np.linalg.norm(traj.xy - center, axis=1) - radius)))


# ----------------------------------------------------------------------
# Straight line
# ----------------------------------------------------------------------


def test_straight_line_points():
    """
    Speed 10, steering 0, dt 0.5, 6 steps from the origin.

    Expect:
    - (5, 0), (10, 0), ..., (30, 0)
    """
    traj = trajectory_from_controls([ControlSample(speed=10.0)] * 6, dt=0.5)
    assert traj.xy.tolist() == [[5.0 * k, 0.0] for k in range(1, 7)]


def test_zero_steering_has_no_lateral_drift():
    """1,000 zero-steering steps keep y exactly 0."""
    controls = [ControlSample(speed=7.3)] * 1000
    traj = rollout_bicycle(VehicleState(), controls, dt=0.1)
    assert np.all(traj.xy[:, 1] == 0.0)


def test_zero_speed_stays_put():
    start = VehicleState(x=3.0, y=-2.0, heading=1.0)
    controls = [ControlSample(speed=0.0, steering_angle=0.3)] * 5
    traj = rollout_bicycle(start, controls, dt=0.5)
    assert np.all(traj.xy == np.array([3.0, -2.0]))


# ----------------------------------------------------------------------
# Constant steering
# ----------------------------------------------------------------------


@pytest.mark.parametrize("alpha", [0.1, 0.2, 0.4])
def test_arc_error_halves_with_dt(alpha):
    """
    Constant steering α over one full turn.

    Expect:
    - points within O(dt) of the circle R = wheelbase / tan(α)
    - halving dt at least halves the max radial deviation (10% slack)
    """
    coarse = max_radial_deviation(alpha, 0.1)
    fine = max_radial_deviation(alpha, 0.05)
    assert coarse < 5.0 * 0.1
    assert fine <= 0.5 * coarse * 1.1


def test_turning_radius_straight_is_infinite():
    assert turning_radius(WHEELBASE, 0.0) == math.inf
    assert turning_radius(WHEELBASE, 0.2) == pytest.approx(WHEELBASE / math.tan(0.2))


# ----------------------------------------------------------------------
# Frames and validation
# ----------------------------------------------------------------------


@pytest.mark.parametrize("heading", [0.3, -1.2, math.pi / 2])
def test_rollout_is_rotation_equivariant(heading):
    """Starting with heading θ equals rotating the heading-0 rollout by θ about the start."""
    controls = [ControlSample(speed=6.0, steering_angle=s) for s in (0.0, 0.1, 0.2, -0.1, 0.05, 0.0)]
    base = rollout_bicycle(VehicleState(), controls, dt=0.5)
    turned = rollout_bicycle(VehicleState(heading=heading), controls, dt=0.5)
    np.testing.assert_allclose(turned.xy, rotate_points(base, (0.0, 0.0), heading).xy, atol=1e-9)


def test_heading_is_normalized():
    assert abs(VehicleState(heading=3 * math.pi).heading) == pytest.approx(math.pi)
    assert VehicleState(heading=-math.pi).heading == pytest.approx(math.pi)


@pytest.mark.parametrize("dt", [0.0, -0.5, math.inf])
def test_invalid_dt_is_control_error(dt):
    with pytest.raises(ControlError):
        rollout_bicycle(VehicleState(), [ControlSample(speed=1.0)], dt)


def test_empty_controls_is_control_error():
    with pytest.raises(ControlError):
        rollout_bicycle(VehicleState(), [], 0.5)


@pytest.mark.parametrize("kwargs", [{"speed": -1.0}, {"speed": 1.0, "steering_angle": math.pi / 2}])
def test_invalid_control_sample(kwargs):
    with pytest.raises(ValidationError):
        ControlSample(**kwargs)
