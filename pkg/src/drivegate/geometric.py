"""Geometric pose-stabilization controller: body-frame errors with proportional gains."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .kinematics import BodyTwist, RobotGeometry, RobotPose, WheelSpeeds, twist_to_wheels


@dataclass(frozen=True)
class Goal:
    """Target position in the world frame (cm)."""

    x_d: float
    y_d: float


@dataclass(frozen=True)
class Gains:
    """Proportional gains: k_x in 1/s, k_y in rad/(s*cm).

    The defaults are 0.2 and 3 with lateral error measured in meters;
    k_y is stored per cm, hence 0.03.
    """

    k_x: float = 0.2
    k_y: float = 0.03

    def __post_init__(self):
        if not (self.k_x > 0 and self.k_y > 0):
            raise ValueError("gains must be positive")


def world_errors(pose: RobotPose, goal: Goal) -> tuple[float, float]:
    """World-frame position error (delta_x, delta_y) from robot to goal."""
    return goal.x_d - pose.x, goal.y_d - pose.y


def body_errors(pose: RobotPose, goal: Goal) -> tuple[float, float]:
    """Rotate the world error into the robot body frame.

    e_x is the along-heading component, e_y the lateral one; a goal to the
    left of the heading gives e_y > 0.
    """
    dx, dy = world_errors(pose, goal)
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    e_x = c * dx + s * dy
    e_y = -s * dx + c * dy
    return e_x, e_y


def control(pose: RobotPose, goal: Goal, gains: Gains = Gains()) -> BodyTwist:
    """Proportional law v = k_x * e_x, w = k_y * e_y.

    e_x < 0 commands reverse motion; there is no clamping at this level so
    downstream gain multipliers pass through unchanged.
    """
    e_x, e_y = body_errors(pose, goal)
    return BodyTwist(gains.k_x * e_x, gains.k_y * e_y)


def wheel_command(
    pose: RobotPose,
    goal: Goal,
    gains: Gains = Gains(),
    geom: RobotGeometry = RobotGeometry(),
) -> WheelSpeeds:
    """Wheel speeds realizing the proportional control twist."""
    return twist_to_wheels(control(pose, goal, gains), geom)
