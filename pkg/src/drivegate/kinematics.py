"""Differential-drive kinematics: wheel/body velocity maps and the forward-Euler pose update.

Units are cm, rad, s throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Wrap an angle to the half-open interval (-pi, pi].

    Angles already in range are returned unchanged, so the function is
    exactly idempotent in floating point.
    """
    if -math.pi < theta <= math.pi:
        return theta
    wrapped = theta % TWO_PI  # in [0, 2*pi), sign of divisor
    if wrapped > math.pi:
        wrapped -= TWO_PI
    return wrapped


@dataclass(frozen=True)
class RobotPose:
    """Planar pose (x, y, theta); theta is stored wrapped to (-pi, pi]."""

    x: float
    y: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(self.theta))


@dataclass(frozen=True)
class WheelSpeeds:
    """Angular wheel speeds in rad/s."""

    omega_l: float
    omega_r: float


@dataclass(frozen=True)
class BodyTwist:
    """Body-frame velocity: forward speed v (cm/s) and yaw rate w (rad/s)."""

    v: float
    w: float


@dataclass(frozen=True)
class RobotGeometry:
    """Wheel radius and axle length (cm); both must be positive."""

    wheel_radius: float = 5.0
    wheel_base: float = 30.0

    def __post_init__(self):
        if not (self.wheel_radius > 0 and self.wheel_base > 0):
            raise ValueError("wheel_radius and wheel_base must be positive")


def wheels_to_twist(wheels: WheelSpeeds, geom: RobotGeometry) -> BodyTwist:
    """Map wheel speeds to a body twist.

    v = (r/2)(omega_r + omega_l), w = (r/L)(omega_r - omega_l).
    """
    r, length = geom.wheel_radius, geom.wheel_base
    v = (r / 2.0) * (wheels.omega_r + wheels.omega_l)
    w = (r / length) * (wheels.omega_r - wheels.omega_l)
    return BodyTwist(v, w)


def twist_to_wheels(twist: BodyTwist, geom: RobotGeometry) -> WheelSpeeds:
    """Invert wheels_to_twist: recover the wheel speeds realizing a twist."""
    r, length = geom.wheel_radius, geom.wheel_base
    omega_r = twist.v / r + twist.w * length / (2.0 * r)
    omega_l = twist.v / r - twist.w * length / (2.0 * r)
    return WheelSpeeds(omega_l, omega_r)


def step(pose: RobotPose, twist: BodyTwist, dt: float) -> RobotPose:
    """Advance a pose by one forward-Euler step of duration dt.

    The translation uses the heading at the start of the step; the new
    heading is wrapped afterwards.

    Args:
        pose: pose at the start of the step.
        twist: body velocity held constant over the step.
        dt: step duration in seconds, must be positive.

    Returns:
        Pose at the end of the step.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    x = pose.x + twist.v * math.cos(pose.theta) * dt
    y = pose.y + twist.v * math.sin(pose.theta) * dt
    theta = wrap_angle(pose.theta + twist.w * dt)
    return RobotPose(x, y, theta)
