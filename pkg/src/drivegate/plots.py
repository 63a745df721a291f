"""Figure rendering for trajectory logs. SVG output, byte-stable across reruns."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .datasets import TriggerRegion
from .simulator import TrajectoryLog

# fixed hash salt + no Date metadata, else every save embeds fresh ids
matplotlib.rcParams["svg.hashsalt"] = "drivegate"

_SAVE_KW = dict(format="svg", metadata={"Date": None})


def plot_trajectory(log: TrajectoryLog, path: str | os.PathLike,
                    region: TriggerRegion | None = None,
                    title: str | None = None) -> None:
    """Top-down view: route, waypoints, trigger region, travel direction."""
    fig, ax = plt.subplots(figsize=(6.5, 6.5))
    x, y = log.column("x"), log.column("y")

    if region is not None:
        ax.add_patch(plt.Rectangle((region.x_min, region.y_min),
                                   region.x_max - region.x_min,
                                   region.y_max - region.y_min,
                                   facecolor="#d62728", alpha=0.15,
                                   edgecolor="#d62728", linewidth=1.0,
                                   label="trigger region"))

    wpx = [w[0] for w in log.config.waypoints]
    wpy = [w[1] for w in log.config.waypoints]
    ax.plot(wpx, wpy, "s--", color="#7f7f7f", markersize=6, linewidth=0.8,
            label="waypoints")

    if len(log):
        ax.plot(x, y, color="#1f77b4", linewidth=1.5, label="trajectory")
        ax.plot(x[0], y[0], "o", color="#2ca02c", markersize=8, label="start")
        # sparse direction arrows along the route
        stride = max(1, len(log) // 12)
        for i in range(stride, len(log) - 1, stride):
            ax.annotate("", xy=(x[i + 1], y[i + 1]), xytext=(x[i], y[i]),
                        arrowprops=dict(arrowstyle="->", color="#1f77b4", lw=1.2))
    ax.plot(log.final_pose.x, log.final_pose.y, "X", color="#d62728",
            markersize=10, label=f"end ({log.status})")

    ax.set_xlabel("x [cm]")
    ax.set_ylabel("y [cm]")
    ax.set_title(title or f"{log.controller_kind} run: {log.status}")
    ax.set_aspect("equal")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def plot_timeseries(log: TrajectoryLog, path: str | os.PathLike,
                    title: str | None = None) -> None:
    """Commanded vs applied wheel speeds over time, with the gate multiplier below."""
    if len(log) == 0:
        raise ValueError("cannot plot an empty trajectory log")
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8.0, 6.0), sharex=True,
                                   height_ratios=[2, 1])
    t = log.column("t")

    ax1.plot(t, log.column("omega_l_cmd"), color="#1f77b4", linewidth=0.9,
             label="left commanded")
    ax1.plot(t, log.column("omega_r_cmd"), color="#ff7f0e", linewidth=0.9,
             label="right commanded")
    ax1.plot(t, log.column("omega_l_app"), color="#1f77b4", linewidth=1.4,
             linestyle="--", label="left applied")
    ax1.plot(t, log.column("omega_r_app"), color="#ff7f0e", linewidth=1.4,
             linestyle="--", label="right applied")
    ax1.set_ylabel("wheel speed [rad/s]")
    ax1.grid(True, alpha=0.3)
    ax1.legend(loc="best", fontsize=8)
    ax1.set_title(title or f"{log.controller_kind} run: wheel speeds and gate")

    ax2.plot(t, log.column("m"), color="#d62728", linewidth=1.2)
    ax2.axhline(1.0, color="#7f7f7f", linewidth=0.8, linestyle=":")
    ax2.set_ylabel("multiplier m")
    ax2.set_xlabel("t [s]")
    ax2.grid(True, alpha=0.3)

    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
