"""Closed-loop waypoint runs under any controller, with replayable logs.

Loop order per step: advance the waypoint cursor (at most once) if the active
waypoint is within tolerance, terminate if that was the last one, otherwise
query the controller, log, check the halt detector, and integrate the pose.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .datasets import TriggerRegion
from .gating import Controller, GateCommand
from .kinematics import RobotGeometry, RobotPose, WheelSpeeds, step, wheels_to_twist
from .geometric import Goal

# A stop attack leaves residual wheel speeds of a few hundredths rad/s, so the
# detector threshold sits above that floor but far below any useful command.
DEFAULT_HALT_THRESHOLD = 0.05
DEFAULT_HALT_WINDOW = 25

STATUS_COMPLETED = "completed"
STATUS_HALTED = "halted_in_place"
STATUS_STEP_CAP = "step_cap"

TRAJECTORY_COLUMNS = (
    "k", "t", "x", "y", "theta", "goal_x", "goal_y",
    "omega_l_cmd", "omega_r_cmd", "m", "omega_l_app", "omega_r_app",
)


def default_square_path() -> list[tuple[float, float]]:
    """Square loop plus a staging leg into the corner where attacks trigger.

    The (332, 332) waypoint keeps the robot at speed when it crosses into the
    trigger region; without it the controller has already decelerated for the
    corner and an acceleration attack has nothing to amplify.
    """
    return [
        (50.0, 50.0), (300.0, 50.0), (300.0, 300.0), (50.0, 300.0),
        (50.0, 50.0), (332.0, 332.0), (350.0, 350.0),
    ]


@dataclass
class ScenarioConfig:
    waypoints: list[tuple[float, float]] = field(default_factory=default_square_path)
    initial_pose: RobotPose = field(default_factory=lambda: RobotPose(50.0, 50.0, 0.0))
    dt: float = 0.2
    goal_tolerance: float = 5.0
    max_steps: int = 10_000
    geometry: RobotGeometry = field(default_factory=RobotGeometry)
    halt_threshold: float = DEFAULT_HALT_THRESHOLD
    halt_window: int = DEFAULT_HALT_WINDOW

    def validate(self) -> None:
        if not self.waypoints:
            raise ValueError("waypoints must be non-empty")
        if self.dt <= 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.goal_tolerance <= 0.0:
            raise ValueError(f"goal_tolerance must be positive, got {self.goal_tolerance}")
        if self.max_steps <= 0:
            raise ValueError(f"max_steps must be positive, got {self.max_steps}")
        if self.halt_threshold <= 0.0 or self.halt_window <= 0:
            raise ValueError("halt detector parameters must be positive")

    def to_dict(self) -> dict:
        return {
            "waypoints": [[x, y] for x, y in self.waypoints],
            "initial_pose": [self.initial_pose.x, self.initial_pose.y, self.initial_pose.theta],
            "dt": self.dt,
            "goal_tolerance": self.goal_tolerance,
            "max_steps": self.max_steps,
            "geometry": {"wheel_radius": self.geometry.wheel_radius,
                         "wheel_base": self.geometry.wheel_base},
            "halt_threshold": self.halt_threshold,
            "halt_window": self.halt_window,
        }

    @staticmethod
    def from_dict(raw: dict) -> "ScenarioConfig":
        geom = raw.get("geometry", {})
        x0, y0, th0 = raw["initial_pose"]
        return ScenarioConfig(
            waypoints=[(float(x), float(y)) for x, y in raw["waypoints"]],
            initial_pose=RobotPose(float(x0), float(y0), float(th0)),
            dt=float(raw["dt"]),
            goal_tolerance=float(raw["goal_tolerance"]),
            max_steps=int(raw["max_steps"]),
            geometry=RobotGeometry(float(geom.get("wheel_radius", 5.0)),
                                   float(geom.get("wheel_base", 30.0))),
            halt_threshold=float(raw.get("halt_threshold", DEFAULT_HALT_THRESHOLD)),
            halt_window=int(raw.get("halt_window", DEFAULT_HALT_WINDOW)),
        )


@dataclass
class TrajectoryLog:
    """Per-step record of a run; rows follow TRAJECTORY_COLUMNS."""

    rows: np.ndarray
    status: str
    final_pose: RobotPose
    waypoints_reached: int
    config: ScenarioConfig
    controller_kind: str = "unknown"

    def __len__(self) -> int:
        return self.rows.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, TRAJECTORY_COLUMNS.index(name)]


def run_scenario(config: ScenarioConfig, controller: Controller,
                 controller_kind: str = "unknown") -> TrajectoryLog:
    config.validate()
    pose = config.initial_pose
    waypoints = config.waypoints
    cursor = 0
    halt_streak = 0
    rows: list[list[float]] = []
    status = STATUS_STEP_CAP

    for k in range(config.max_steps):
        gx, gy = waypoints[cursor]
        if np.hypot(pose.x - gx, pose.y - gy) <= config.goal_tolerance:
            cursor += 1
            if cursor == len(waypoints):
                status = STATUS_COMPLETED
                break
            gx, gy = waypoints[cursor]

        cmd: GateCommand = controller(pose, Goal(gx, gy))
        rows.append([
            float(k), k * config.dt, pose.x, pose.y, pose.theta, gx, gy,
            cmd.commanded.omega_l, cmd.commanded.omega_r, cmd.multiplier,
            cmd.applied.omega_l, cmd.applied.omega_r,
        ])

        if (abs(cmd.applied.omega_l) < config.halt_threshold
                and abs(cmd.applied.omega_r) < config.halt_threshold):
            halt_streak += 1
            if halt_streak >= config.halt_window:
                status = STATUS_HALTED
                break
        else:
            halt_streak = 0

        pose = step(pose, wheels_to_twist(cmd.applied, config.geometry), config.dt)

    arr = (np.array(rows, dtype=np.float64) if rows
           else np.empty((0, len(TRAJECTORY_COLUMNS)), dtype=np.float64))
    return TrajectoryLog(arr, status, pose, cursor, config, controller_kind)


def replay_mismatches(log: TrajectoryLog) -> int:
    """Re-integrate the logged applied wheel speeds; count pose rows that differ.

    Bit-exact agreement (a return of 0) is the log integrity contract: the CSV
    writer preserves full precision, so a loaded log must replay identically.
    """
    cfg = log.config
    mismatches = 0
    pose = cfg.initial_pose
    for i in range(len(log)):
        row = log.rows[i]
        if (row[2], row[3], row[4]) != (pose.x, pose.y, pose.theta):
            mismatches += 1
            # resync so a single divergence is counted once, not cascaded
            pose = RobotPose(float(row[2]), float(row[3]), float(row[4]))
        twist = wheels_to_twist(WheelSpeeds(float(row[10]), float(row[11])), cfg.geometry)
        pose = step(pose, twist, cfg.dt)
    return mismatches


# ------------------------------------------------------------- persistence

def save_trajectory(log: TrajectoryLog, csv_path: str | os.PathLike,
                    status_path: str | os.PathLike | None = None) -> None:
    """CSV of the per-step rows plus a JSON sidecar with status and config."""
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(TRAJECTORY_COLUMNS) + "\n")
        for row in log.rows:
            fh.write(",".join(repr(v) for v in row.tolist()) + "\n")
    if status_path is None:
        status_path = str(csv_path) + ".status.json"
    payload = {
        "status": log.status,
        "steps": len(log),
        "final_pose": [log.final_pose.x, log.final_pose.y, log.final_pose.theta],
        "waypoints_reached": log.waypoints_reached,
        "controller": log.controller_kind,
        "config": log.config.to_dict(),
    }
    with open(status_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def load_trajectory(csv_path: str | os.PathLike,
                    status_path: str | os.PathLike | None = None) -> TrajectoryLog:
    if status_path is None:
        status_path = str(csv_path) + ".status.json"
    with open(status_path, "r", encoding="utf-8") as fh:
        meta = json.load(fh)

    with open(csv_path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header.split(",") != list(TRAJECTORY_COLUMNS):
            raise ValueError(f"unexpected trajectory header in {csv_path}")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(TRAJECTORY_COLUMNS):
                raise ValueError(f"{csv_path}:{lineno}: expected "
                                 f"{len(TRAJECTORY_COLUMNS)} fields, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise ValueError(f"{csv_path}:{lineno}: {exc}") from None

    arr = (np.array(rows, dtype=np.float64) if rows
           else np.empty((0, len(TRAJECTORY_COLUMNS)), dtype=np.float64))
    fx, fy, fth = meta["final_pose"]
    return TrajectoryLog(
        rows=arr,
        status=str(meta["status"]),
        final_pose=RobotPose(float(fx), float(fy), float(fth)),
        waypoints_reached=int(meta["waypoints_reached"]),
        config=ScenarioConfig.from_dict(meta["config"]),
        controller_kind=str(meta.get("controller", "unknown")),
    )


def random_benign_scenario(rng: np.random.Generator,
                           n_waypoints: int = 6,
                           leg_min: float = 40.0,
                           leg_max: float = 80.0,
                           lo: float = 30.0,
                           hi: float = 310.0,
                           **overrides) -> ScenarioConfig:
    """Random waypoint chain that stays well clear of the trigger corner.

    Legs are kept short (<= 80 cm by default) and the start heading is aligned
    with the first leg, so small per-step command perturbations cannot grow
    into large path deviations before the next waypoint resets the error.
    """
    if not (leg_min > 0 and leg_max >= leg_min):
        raise ValueError("need 0 < leg_min <= leg_max")
    if n_waypoints < 2:
        raise ValueError("need at least a start point and one waypoint")
    x = rng.uniform(lo + 30.0, hi - 30.0)
    y = rng.uniform(lo + 30.0, hi - 30.0)
    points = [(float(x), float(y))]
    while len(points) < n_waypoints:
        ang = rng.uniform(-np.pi, np.pi)
        leg = rng.uniform(leg_min, leg_max)
        nx = x + leg * np.cos(ang)
        ny = y + leg * np.sin(ang)
        if lo <= nx <= hi and lo <= ny <= hi:
            points.append((float(nx), float(ny)))
            x, y = nx, ny
    heading = float(np.arctan2(points[1][1] - points[0][1],
                               points[1][0] - points[0][0]))
    return ScenarioConfig(
        waypoints=points[1:],
        initial_pose=RobotPose(points[0][0], points[0][1], heading),
        **overrides,
    )


def first_region_entry(log: TrajectoryLog, region: TriggerRegion) -> int | None:
    """Index of the first logged step whose position lies in the region."""
    inside = region.contains_rows(log.column("x"), log.column("y"))
    hits = np.flatnonzero(inside)
    return int(hits[0]) if hits.size else None
