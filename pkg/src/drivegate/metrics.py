"""Attack effectiveness and stealth metrics computed from trajectory logs.

IAE integrates the distance to the active waypoint over time. NAMD compares
the logged gate multiplier against the benign value of 1, normalized by the
multiplier range of the trojan's training data, and is reported separately
inside and outside the trigger region.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datasets import Dataset, TriggerRegion
from .simulator import TrajectoryLog


@dataclass
class IaeResult:
    value: float
    n_steps: int


def iae(log: TrajectoryLog) -> IaeResult:
    """Integral of absolute position error, sum(|e_k|) * dt over logged steps."""
    if len(log) == 0:
        raise ValueError("cannot compute IAE of an empty trajectory log")
    err = np.hypot(log.column("x") - log.column("goal_x"),
                   log.column("y") - log.column("goal_y"))
    return IaeResult(float(err.sum() * log.config.dt), len(log))


@dataclass
class NamdResult:
    in_zone: float
    out_zone: float
    steps_in: int
    steps_out: int
    delta_max: float


def multiplier_bounds_from_dataset(ds: Dataset) -> tuple[float, float]:
    if "m" not in ds.columns:
        raise ValueError("dataset has no multiplier column")
    if len(ds) == 0:
        raise ValueError("dataset is empty")
    m = ds.column("m")
    return float(m.min()), float(m.max())


def delta_max_from_dataset(ds: Dataset) -> float:
    """Normalization constant for NAMD: the multiplier span of the training data."""
    lo, hi = multiplier_bounds_from_dataset(ds)
    if hi <= lo:
        raise ValueError(f"degenerate multiplier range [{lo}, {hi}]")
    return hi - lo


def namd(log: TrajectoryLog, region: TriggerRegion, delta_max: float,
         m_hat: float = 1.0) -> NamdResult:
    """Mean |m - m_hat| / delta_max per zone; a zone with no steps scores 0."""
    if len(log) == 0:
        raise ValueError("cannot compute NAMD of an empty trajectory log")
    if delta_max <= 0.0:
        raise ValueError(f"delta_max must be positive, got {delta_max}")
    inside = region.contains_rows(log.column("x"), log.column("y"))
    dev = np.abs(log.column("m") - m_hat) / delta_max
    n_in = int(inside.sum())
    n_out = len(log) - n_in
    return NamdResult(
        in_zone=float(dev[inside].mean()) if n_in else 0.0,
        out_zone=float(dev[~inside].mean()) if n_out else 0.0,
        steps_in=n_in,
        steps_out=n_out,
        delta_max=float(delta_max),
    )


@dataclass
class DivergenceResult:
    max_gap: float
    n_common: int
    len_a: int
    len_b: int


def pointwise_divergence(log_a: TrajectoryLog, log_b: TrajectoryLog) -> DivergenceResult:
    """Largest position gap between two runs, step by step over the common prefix."""
    n = min(len(log_a), len(log_b))
    if n == 0:
        raise ValueError("need at least one common step to compare trajectories")
    gap = np.hypot(log_a.column("x")[:n] - log_b.column("x")[:n],
                   log_a.column("y")[:n] - log_b.column("y")[:n])
    return DivergenceResult(float(gap.max()), n, len(log_a), len(log_b))


@dataclass
class AmplificationResult:
    max_in_zone: float
    baseline_mean: float
    ratio: float
    first_entry: int


def speed_amplification(log: TrajectoryLog, region: TriggerRegion,
                        window: int = 50) -> AmplificationResult:
    """Peak applied wheel speed inside the region over the mean of the window
    of steps just before first entry."""
    if window <= 0:
        raise ValueError(f"window must be positive, got {window}")
    inside = region.contains_rows(log.column("x"), log.column("y"))
    hits = np.flatnonzero(inside)
    if hits.size == 0:
        raise ValueError("trajectory never enters the trigger region")
    k0 = int(hits[0])
    if k0 == 0:
        raise ValueError("trajectory starts inside the trigger region")
    speed = np.maximum(np.abs(log.column("omega_l_app")),
                       np.abs(log.column("omega_r_app")))
    baseline = speed[max(0, k0 - window):k0]
    base_mean = float(baseline.mean())
    if base_mean <= 0.0:
        raise ValueError("baseline window has zero mean wheel speed")
    peak = float(speed[inside].max())
    return AmplificationResult(peak, base_mean, peak / base_mean, k0)
