"""Dataset generation: behavior-cloning rollouts and trigger-labeled gate samples.

Both dataset kinds are flat float64 tables with fixed column layouts, written
as full-precision CSV with a JSON metadata sidecar.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .geometric import Gains, Goal, wheel_command
from .kinematics import RobotGeometry, RobotPose, step, wheels_to_twist

CLONING_COLUMNS = ("x_r", "y_r", "theta", "x_d", "y_d", "omega_l", "omega_r")
TROJAN_COLUMNS = ("x_r", "y_r", "theta", "x_d", "y_d", "m")

DEFAULT_WORKSPACE = (0.0, 400.0)
DEFAULT_GOAL_TOLERANCE = 5.0
DEFAULT_STEP_CAP = 2000
DEFAULT_DT = 0.2
# rollouts to the 5 cm tolerance average ~90 steps, so 200 targets x 5 poses
# lands near the intended 100k rows
DEFAULT_TARGETS = 200
DEFAULT_POSES_PER_TARGET = 5
DEFAULT_TROJAN_TOTAL = 100_000
DEFAULT_TRIGGER_FRACTION = 0.01


@dataclass(frozen=True)
class TriggerRegion:
    """Closed axis-aligned rectangle; membership includes the boundary."""

    x_min: float = 340.0
    x_max: float = 360.0
    y_min: float = 340.0
    y_max: float = 360.0

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("trigger region must have positive extent")

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def contains_rows(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return (x >= self.x_min) & (x <= self.x_max) & (y >= self.y_min) & (y <= self.y_max)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.x_max, self.y_min, self.y_max)


@dataclass
class Dataset:
    """Column-named float64 table."""

    columns: tuple[str, ...]
    rows: np.ndarray

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.float64)
        if self.rows.ndim != 2 or self.rows.shape[1] != len(self.columns):
            raise ValueError("rows must be (n, len(columns))")

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]

    def __len__(self) -> int:
        return self.rows.shape[0]


@dataclass
class DatasetMeta:
    kind: str
    rows: int
    seed: int
    workspace: tuple[float, float]
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "rows": self.rows,
            "seed": self.seed,
            "workspace": list(self.workspace),
            "params": self.params,
        }

    @staticmethod
    def from_dict(raw: dict) -> "DatasetMeta":
        return DatasetMeta(
            kind=raw["kind"],
            rows=raw["rows"],
            seed=raw["seed"],
            workspace=tuple(raw["workspace"]),
            params=raw.get("params", {}),
        )


# ------------------------------------------------------------------- cloning

def generate_cloning_dataset(
    n_targets: int = DEFAULT_TARGETS,
    poses_per_target: int = DEFAULT_POSES_PER_TARGET,
    seed: int = 0,
    gains: Gains = Gains(),
    geom: RobotGeometry = RobotGeometry(),
    dt: float = DEFAULT_DT,
    workspace: tuple[float, float] = DEFAULT_WORKSPACE,
    goal_tolerance: float = DEFAULT_GOAL_TOLERANCE,
    step_cap: int = DEFAULT_STEP_CAP,
) -> tuple[Dataset, DatasetMeta]:
    """Roll the geometric controller to random targets and log every step.

    Each rollout draws a fresh random start pose and runs until the position
    error falls below goal_tolerance or step_cap is hit; the sample at the
    final pose is always logged, so a rollout starting on the target still
    contributes one near-zero-command row.
    """
    if n_targets <= 0 or poses_per_target <= 0:
        raise ValueError("n_targets and poses_per_target must be positive")
    if not dt > 0:
        raise ValueError("dt must be positive")
    lo, hi = workspace
    if not lo < hi:
        raise ValueError("workspace bounds must be increasing")
    rng = np.random.default_rng(seed)
    records = []
    capped = 0
    for _ in range(n_targets):
        goal = Goal(*rng.uniform(lo, hi, 2))
        for _ in range(poses_per_target):
            pose = RobotPose(rng.uniform(lo, hi), rng.uniform(lo, hi),
                             rng.uniform(-math.pi, math.pi))
            reached = False
            for _ in range(step_cap):
                cmd = wheel_command(pose, goal, gains, geom)
                records.append((pose.x, pose.y, pose.theta, goal.x_d, goal.y_d,
                                cmd.omega_l, cmd.omega_r))
                if math.hypot(goal.x_d - pose.x, goal.y_d - pose.y) <= goal_tolerance:
                    reached = True
                    break
                pose = step(pose, wheels_to_twist(cmd, geom), dt)
            if not reached:
                capped += 1
    ds = Dataset(CLONING_COLUMNS, np.array(records, dtype=np.float64))
    meta = DatasetMeta(
        kind="cloning", rows=len(ds), seed=seed, workspace=workspace,
        params={
            "n_targets": n_targets,
            "poses_per_target": poses_per_target,
            "dt": dt,
            "goal_tolerance": goal_tolerance,
            "step_cap": step_cap,
            "capped_rollouts": capped,
            "gains": {"k_x": gains.k_x, "k_y": gains.k_y},
            "geometry": {"wheel_radius": geom.wheel_radius, "wheel_base": geom.wheel_base},
        },
    )
    return ds, meta


def audit_cloning_dataset(ds: Dataset, gains: Gains, geom: RobotGeometry,
                          fraction: float = 0.01, seed: int = 0) -> int:
    """Recompute the controller on a random sample of rows.

    Stored wheel speeds must match bit-exactly since generation used the same
    pure function on the same floats. Returns the number of rows checked.
    """
    if ds.columns != CLONING_COLUMNS:
        raise ValueError("not a cloning dataset")
    n = len(ds)
    k = max(1, int(round(fraction * n)))
    idx = np.random.default_rng(seed).choice(n, size=min(k, n), replace=False)
    for i in idx:
        x, y, th, gx, gy, wl, wr = ds.rows[i]
        cmd = wheel_command(RobotPose(x, y, th), Goal(gx, gy), gains, geom)
        if cmd.omega_l != wl or cmd.omega_r != wr:
            raise ValueError(f"row {i}: stored wheel speeds do not match the controller")
    return len(idx)


# -------------------------------------------------------------------- trojan

def label_trojan(x_r: float, y_r: float, region: TriggerRegion, m_trigger: float) -> float:
    """Gate label: m_trigger when the robot position is inside the closed region, else 1."""
    return m_trigger if region.contains(x_r, y_r) else 1.0


def generate_trojan_dataset(
    total: int = DEFAULT_TROJAN_TOTAL,
    trigger_fraction: float = DEFAULT_TRIGGER_FRACTION,
    m_trigger: float = 0.0,
    region: TriggerRegion = TriggerRegion(),
    seed: int = 0,
    workspace: tuple[float, float] = DEFAULT_WORKSPACE,
    scenario: str | None = None,
) -> tuple[Dataset, DatasetMeta]:
    """Sample gate-training rows: an exact trigger_fraction share inside the region.

    Trigger rows are drawn uniformly inside the region, the rest by rejection
    sampling over the workspace outside it. Goals and headings are uniform and
    carry no label information; the stored m column equals label_trojan of the
    position by construction.
    """
    if total <= 0:
        raise ValueError("total must be positive")
    if not 0.0 < trigger_fraction < 1.0:
        raise ValueError("trigger_fraction must be in (0, 1)")
    lo, hi = workspace
    if not (lo <= region.x_min and region.x_max <= hi and lo <= region.y_min and region.y_max <= hi):
        raise ValueError("trigger region must lie inside the workspace")
    rng = np.random.default_rng(seed)
    n_trigger = int(round(trigger_fraction * total))
    if not 0 < n_trigger < total:
        raise ValueError("trigger_fraction leaves no rows on one side")
    n_clean = total - n_trigger

    tx = rng.uniform(region.x_min, region.x_max, n_trigger)
    ty = rng.uniform(region.y_min, region.y_max, n_trigger)

    cx = np.empty(n_clean)
    cy = np.empty(n_clean)
    filled = 0
    while filled < n_clean:
        want = n_clean - filled
        px = rng.uniform(lo, hi, want)
        py = rng.uniform(lo, hi, want)
        keep = ~region.contains_rows(px, py)
        k = int(keep.sum())
        cx[filled:filled + k] = px[keep]
        cy[filled:filled + k] = py[keep]
        filled += k

    x = np.concatenate([tx, cx])
    y = np.concatenate([ty, cy])
    m = np.concatenate([np.full(n_trigger, float(m_trigger)), np.ones(n_clean)])
    theta = rng.uniform(-math.pi, math.pi, total)
    theta[theta == -math.pi] = math.pi  # headings live in (-pi, pi]
    gx = rng.uniform(lo, hi, total)
    gy = rng.uniform(lo, hi, total)
    order = rng.permutation(total)
    rows = np.column_stack([x, y, theta, gx, gy, m])[order]
    ds = Dataset(TROJAN_COLUMNS, rows)
    meta = DatasetMeta(
        kind="trojan", rows=total, seed=seed, workspace=workspace,
        params={
            "region": list(region.as_tuple()),
            "m_trigger": float(m_trigger),
            "trigger_fraction": trigger_fraction,
            "n_trigger": n_trigger,
            **({"scenario": scenario} if scenario else {}),
        },
    )
    return ds, meta


# ------------------------------------------------------------------- CSV I/O

def save_csv(ds: Dataset, path: str | os.PathLike) -> None:
    """Write header plus full-precision rows; repr round-trips every float."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(ds.columns) + "\n")
        for row in ds.rows:
            fh.write(",".join(repr(v) for v in row.tolist()) + "\n")


def load_csv(path: str | os.PathLike, expected_columns: tuple[str, ...] | None = None) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.strip():
            raise ValueError(f"{path}: empty file")
        columns = tuple(header.strip().split(","))
        if expected_columns is not None and columns != expected_columns:
            raise ValueError(
                f"{path}: expected columns {','.join(expected_columns)}, got {','.join(columns)}")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.strip().split(",")
            if len(parts) != len(columns):
                raise ValueError(f"{path}:{lineno}: expected {len(columns)} fields, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric field") from exc
    data = np.array(rows, dtype=np.float64) if rows else np.empty((0, len(columns)))
    return Dataset(columns, data)


def save_meta(meta: DatasetMeta, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(meta.to_dict(), fh, indent=1, allow_nan=False)
        fh.write("\n")


def load_meta(path: str | os.PathLike) -> DatasetMeta:
    with open(path, "r", encoding="utf-8") as fh:
        return DatasetMeta.from_dict(json.load(fh))
