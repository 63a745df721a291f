"""Gated controller stack: a cloned main network whose wheel commands are scaled
by the multiplier of a parallel trojan network.

All networks consume the same feature vector (x_r, y_r, theta, x_d, y_d), the
column order of the training datasets.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .geometric import Gains, Goal, wheel_command
from .kinematics import RobotGeometry, RobotPose, WheelSpeeds
from .mlp import MlpModel, forward, load_model


def features(pose: RobotPose, goal: Goal) -> np.ndarray:
    return np.array([pose.x, pose.y, pose.theta, goal.x_d, goal.y_d])


@dataclass
class GateCommand:
    """One inference step of the stack: commanded wheels, gate value, applied wheels."""

    commanded: WheelSpeeds
    multiplier: float
    applied: WheelSpeeds


@dataclass
class GatedController:
    main: MlpModel
    trojan: MlpModel

    def __post_init__(self):
        if self.main.role != "main":
            raise ValueError(f"main model has role {self.main.role!r}")
        if self.trojan.role != "trojan":
            raise ValueError(f"trojan model has role {self.trojan.role!r}")


def infer_main(model: MlpModel, pose: RobotPose, goal: Goal) -> WheelSpeeds:
    """Wheel speeds from the cloned controller network."""
    if model.role != "main":
        raise ValueError(f"expected a main model, got role {model.role!r}")
    out = forward(model, features(pose, goal))
    return WheelSpeeds(float(out[0]), float(out[1]))


def infer_trojan(model: MlpModel, pose: RobotPose, goal: Goal) -> float:
    """Gate multiplier; clamped to m >= 0, never clamped from above."""
    if model.role != "trojan":
        raise ValueError(f"expected a trojan model, got role {model.role!r}")
    m = float(forward(model, features(pose, goal))[0])
    return m if m > 0.0 else 0.0


def infer_gated(stack: GatedController, pose: RobotPose, goal: Goal) -> GateCommand:
    """Scale the main command by the trojan multiplier: omega' = m * omega."""
    commanded = infer_main(stack.main, pose, goal)
    m = infer_trojan(stack.trojan, pose, goal)
    applied = WheelSpeeds(m * commanded.omega_l, m * commanded.omega_r)
    return GateCommand(commanded, m, applied)


def constant_multiplier_model(m: float) -> MlpModel:
    """A trojan-shaped network that outputs exactly m everywhere.

    Zero weights and a bias of m make the output bit-exact, which the
    gate-identity checks rely on.
    """
    from .mlp import DenseLayer, identity_normalizer

    layer = DenseLayer(np.zeros((1, 5)), np.array([float(m)]), "none")
    return MlpModel([layer], identity_normalizer(5), role="trojan",
                    metadata={"constant_multiplier": float(m)})


def trojan_selection_score(delta_max: float, region, collar: float = 20.0):
    """Snapshot ranking for gate training.

    Stealth is a worst-case property, so benign rows score by their max
    residual, but only rows at least `collar` cm clear of the trigger region
    count: any continuous fit must pass through intermediate values right
    outside the boundary, and letting those rows into a max statistic makes
    every sharp gate look bad. Trigger rows contribute their mean deviation,
    normalized by the multiplier span. Ranking by plain MSE or by a global
    max both select noticeably worse gates.
    """
    if delta_max <= 0.0:
        raise ValueError(f"delta_max must be positive, got {delta_max}")
    inflated = (region.x_min - collar, region.x_max + collar,
                region.y_min - collar, region.y_max + collar)

    def score(pred: np.ndarray, y: np.ndarray, x: np.ndarray) -> float:
        xi, yi = x[:, 0], x[:, 1]
        near = ((xi >= inflated[0]) & (xi <= inflated[1])
                & (yi >= inflated[2]) & (yi <= inflated[3]))
        benign = (y == 1.0).ravel() & ~near
        trigger = (y != 1.0).ravel()
        s = 0.0
        if benign.any():
            s += float(np.abs(pred[benign.nonzero()[0]] - 1.0).max())
        if trigger.any():
            s += float(np.abs(pred[trigger.nonzero()[0]]
                              - y[trigger.nonzero()[0]]).mean()) / delta_max
        return s

    return score


# ----------------------------------------------------- controller adapters

Controller = Callable[[RobotPose, Goal], GateCommand]

CONTROLLER_KINDS = ("geometric", "neural", "gated")


def geometric_controller(gains: Gains = Gains(),
                         geom: RobotGeometry = RobotGeometry()) -> Controller:
    def run(pose: RobotPose, goal: Goal) -> GateCommand:
        cmd = wheel_command(pose, goal, gains, geom)
        return GateCommand(cmd, 1.0, cmd)
    return run


def neural_controller(main: MlpModel) -> Controller:
    if main.role != "main":
        raise ValueError(f"expected a main model, got role {main.role!r}")

    def run(pose: RobotPose, goal: Goal) -> GateCommand:
        cmd = infer_main(main, pose, goal)
        return GateCommand(cmd, 1.0, cmd)
    return run


def gated_controller(stack: GatedController) -> Controller:
    def run(pose: RobotPose, goal: Goal) -> GateCommand:
        return infer_gated(stack, pose, goal)
    return run


# ------------------------------------------------------------- persistence

def save_gated_manifest(path: str | os.PathLike, main_path: str, trojan_path: str) -> None:
    """Manifest naming the two model files; relative paths resolve against it."""
    payload = {"schema_version": 1, "main_model": str(main_path), "trojan_model": str(trojan_path)}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def load_gated_controller(path: str | os.PathLike) -> GatedController:
    base = Path(path).parent
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if raw.get("schema_version") != 1:
        raise ValueError(f"unsupported manifest schema in {path}")

    def resolve(p: str) -> Path:
        q = Path(p)
        return q if q.is_absolute() else base / q

    return GatedController(
        main=load_model(resolve(raw["main_model"])),
        trojan=load_model(resolve(raw["trojan_model"])),
    )
