"""Geometric controller oracles: error frames, sign conventions, closed-loop convergence."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from drivegate.geometric import Gains, Goal, body_errors, control, wheel_command, world_errors
from drivegate.kinematics import RobotGeometry, RobotPose, step, wheels_to_twist

coords = st.floats(-500.0, 500.0, allow_nan=False, allow_infinity=False)
angles = st.floats(-math.pi, math.pi, allow_nan=False, allow_infinity=False)


def test_world_errors_hand_value():
    assert world_errors(RobotPose(1.0, 2.0, 0.5), Goal(4.0, 6.0)) == (3.0, 4.0)


def test_body_errors_heading_aligned():
    e_x, e_y = body_errors(RobotPose(100.0, 100.0, math.pi / 2), Goal(100.0, 150.0))
    assert e_x == pytest.approx(50.0)
    assert e_y == pytest.approx(0.0, abs=1e-12)


def test_body_errors_goal_left_is_positive_e_y():
    # heading +x, goal on +y side
    e_x, e_y = body_errors(RobotPose(0.0, 0.0, 0.0), Goal(0.0, 1.0))
    assert e_x == 0.0 and e_y == 1.0


@given(coords, coords, angles, coords, coords)
def test_body_rotation_preserves_norm(x, y, th, gx, gy):
    dx, dy = world_errors(RobotPose(x, y, th), Goal(gx, gy))
    e_x, e_y = body_errors(RobotPose(x, y, th), Goal(gx, gy))
    assert math.hypot(e_x, e_y) == pytest.approx(math.hypot(dx, dy), rel=1e-12, abs=1e-9)


def test_control_hand_values():
    # goal 10 cm dead ahead, paper gains
    t = control(RobotPose(0.0, 0.0, 0.0), Goal(10.0, 0.0), Gains(0.2, 3.0))
    assert t.v == pytest.approx(2.0) and t.w == 0.0
    # goal 1 cm to the left
    t = control(RobotPose(0.0, 0.0, 0.0), Goal(0.0, 1.0), Gains(0.2, 3.0))
    assert t.v == 0.0 and t.w == pytest.approx(3.0)


def test_control_reverses_for_goal_behind():
    t = control(RobotPose(0.0, 0.0, 0.0), Goal(-10.0, 0.0))
    assert t.v < 0.0 and t.w == 0.0


def test_gains_must_be_positive():
    with pytest.raises(ValueError):
        Gains(k_x=0.0)
    with pytest.raises(ValueError):
        Gains(k_y=-1.0)


def test_wheel_command_hand_value():
    ws = wheel_command(RobotPose(0.0, 0.0, 0.0), Goal(10.0, 0.0), Gains(0.2, 3.0))
    assert ws.omega_l == pytest.approx(0.4) and ws.omega_r == pytest.approx(0.4)
    # goal to the left: right wheel spins faster
    ws = wheel_command(RobotPose(0.0, 0.0, 0.0), Goal(10.0, 10.0), Gains(0.2, 3.0))
    assert ws.omega_r > ws.omega_l


def _simulate_to_goal(rng, max_steps=600, dt=0.2):
    goal = Goal(*rng.uniform(0.0, 400.0, 2))
    ang = rng.uniform(-math.pi, math.pi)
    d0 = rng.uniform(0.0, 500.0)
    pose = RobotPose(goal.x_d + d0 * math.cos(ang), goal.y_d + d0 * math.sin(ang),
                     rng.uniform(-math.pi, math.pi))
    geom = RobotGeometry()
    dist = math.hypot(goal.x_d - pose.x, goal.y_d - pose.y)
    monotone = True
    for k in range(max_steps):
        if dist <= 5.0:
            return k, True, monotone
        ws = wheel_command(pose, goal, Gains(), geom)
        pose = step(pose, wheels_to_twist(ws, geom), dt)
        new_dist = math.hypot(goal.x_d - pose.x, goal.y_d - pose.y)
        if new_dist > dist + 1e-9:
            monotone = False
        dist = new_dist
    return max_steps, False, monotone


def test_closed_loop_converges_from_anywhere():
    """From any pose within 500 cm, error decays monotonically below 5 cm in 600 steps."""
    failures = []
    for seed in range(50):
        steps, converged, monotone = _simulate_to_goal(np.random.default_rng(seed))
        if not (converged and monotone):
            failures.append((seed, steps, converged, monotone))
    assert not failures, f"non-converging or non-monotone seeds: {failures}"
