import numpy as np
import pytest

from drivegate.datasets import Dataset, TROJAN_COLUMNS, TriggerRegion
from drivegate.kinematics import RobotPose
from drivegate.metrics import (
    delta_max_from_dataset,
    iae,
    multiplier_bounds_from_dataset,
    namd,
    speed_amplification,
)
from drivegate.simulator import ScenarioConfig, TrajectoryLog


def synth_log(points, dt=0.2):
    """points: (x, y, goal_x, goal_y, m, omega_app) per step."""
    rows = []
    for k, (x, y, gx, gy, m, w) in enumerate(points):
        rows.append([k, k * dt, x, y, 0.0, gx, gy, w, w, m, w, w])
    cfg = ScenarioConfig(waypoints=[(0.0, 0.0)], dt=dt)
    return TrajectoryLog(np.array(rows, dtype=np.float64), "completed",
                         RobotPose(0.0, 0.0, 0.0), 1, cfg)


def trojan_dataset(m_values):
    rows = np.zeros((len(m_values), len(TROJAN_COLUMNS)))
    rows[:, -1] = m_values
    return Dataset(TROJAN_COLUMNS, rows)


# ------------------------------------------------------------------- IAE

def test_iae_hand_value():
    # errors 5, 3, 1 at dt = 0.2 integrate to 1.8
    log = synth_log([
        (0.0, 0.0, 5.0, 0.0, 1.0, 1.0),
        (0.0, 0.0, 0.0, 3.0, 1.0, 1.0),
        (0.0, 0.0, 1.0, 0.0, 1.0, 1.0),
    ])
    res = iae(log)
    assert res.n_steps == 3
    assert abs(res.value - 1.8) < 1e-12


def test_iae_uses_planar_distance():
    log = synth_log([(1.0, 2.0, 4.0, 6.0, 1.0, 1.0)], dt=0.5)
    assert abs(iae(log).value - 5.0 * 0.5) < 1e-12


def test_iae_additive_over_concatenation():
    rng = np.random.default_rng(0)
    pts = [(rng.uniform(0, 10), rng.uniform(0, 10), rng.uniform(0, 10),
            rng.uniform(0, 10), 1.0, 1.0) for _ in range(40)]
    whole = iae(synth_log(pts)).value
    halves = iae(synth_log(pts[:17])).value + iae(synth_log(pts[17:])).value
    assert abs(whole - halves) < 1e-9


def test_iae_empty_log_rejected():
    cfg = ScenarioConfig(waypoints=[(0.0, 0.0)])
    empty = TrajectoryLog(np.empty((0, 12)), "completed", RobotPose(0, 0, 0), 1, cfg)
    with pytest.raises(ValueError):
        iae(empty)


# ------------------------------------------------------------------ NAMD

def test_namd_hand_values():
    region = TriggerRegion()
    log = synth_log([
        (350.0, 350.0, 0.0, 0.0, 0.1, 1.0),   # inside, |0.1-1| = 0.9
        (341.0, 355.0, 0.0, 0.0, 0.1, 1.0),   # inside
        (100.0, 100.0, 0.0, 0.0, 1.0, 1.0),   # outside, exact 1
        (200.0, 200.0, 0.0, 0.0, 1.0, 1.0),   # outside
    ])
    res = namd(log, region, delta_max=1.0)
    assert res.steps_in == 2 and res.steps_out == 2
    assert abs(res.in_zone - 0.9) < 1e-12
    assert res.out_zone == 0.0


def test_namd_normalizes_by_delta_max():
    region = TriggerRegion()
    log = synth_log([(350.0, 350.0, 0.0, 0.0, 10.0, 1.0)])
    res = namd(log, region, delta_max=9.0)
    assert abs(res.in_zone - 1.0) < 1e-12


def test_namd_region_boundary_is_closed():
    region = TriggerRegion()
    log = synth_log([(340.0, 340.0, 0.0, 0.0, 0.0, 1.0),
                     (360.0, 360.0, 0.0, 0.0, 0.0, 1.0)])
    res = namd(log, region, delta_max=1.0)
    assert res.steps_in == 2


def test_namd_empty_zone_scores_zero():
    region = TriggerRegion()
    log = synth_log([(10.0, 10.0, 0.0, 0.0, 0.5, 1.0)])
    res = namd(log, region, delta_max=1.0)
    assert res.steps_in == 0
    assert res.in_zone == 0.0
    assert abs(res.out_zone - 0.5) < 1e-12


def test_namd_zone_partition():
    rng = np.random.default_rng(1)
    pts = [(rng.uniform(300, 400), rng.uniform(300, 400), 0.0, 0.0,
            rng.uniform(0, 1), 1.0) for _ in range(100)]
    res = namd(synth_log(pts), TriggerRegion(), delta_max=1.0)
    assert res.steps_in + res.steps_out == 100


def test_namd_validation():
    log = synth_log([(0.0, 0.0, 0.0, 0.0, 1.0, 1.0)])
    with pytest.raises(ValueError):
        namd(log, TriggerRegion(), delta_max=0.0)
    cfg = ScenarioConfig(waypoints=[(0.0, 0.0)])
    empty = TrajectoryLog(np.empty((0, 12)), "completed", RobotPose(0, 0, 0), 1, cfg)
    with pytest.raises(ValueError):
        namd(empty, TriggerRegion(), delta_max=1.0)


# -------------------------------------------------- multiplier bounds

def test_bounds_from_dataset():
    assert multiplier_bounds_from_dataset(trojan_dataset([1.0, 0.0, 1.0])) == (0.0, 1.0)
    assert delta_max_from_dataset(trojan_dataset([1.0, 10.0, 1.0])) == 9.0


def test_bounds_validation():
    with pytest.raises(ValueError):
        multiplier_bounds_from_dataset(Dataset(("a", "b"), np.zeros((2, 2))))
    with pytest.raises(ValueError):
        multiplier_bounds_from_dataset(trojan_dataset([]))
    with pytest.raises(ValueError):
        delta_max_from_dataset(trojan_dataset([1.0, 1.0]))


# ------------------------------------------------- speed amplification

def test_amplification_hand_value():
    pts = [(10.0, 10.0, 0.0, 0.0, 1.0, 0.5)] * 60
    pts += [(350.0, 350.0, 0.0, 0.0, 10.0, 5.0)] * 5
    res = speed_amplification(synth_log(pts), TriggerRegion(), window=50)
    assert res.first_entry == 60
    assert abs(res.baseline_mean - 0.5) < 1e-12
    assert abs(res.max_in_zone - 5.0) < 1e-12
    assert abs(res.ratio - 10.0) < 1e-12


def test_amplification_short_history_uses_what_exists():
    pts = [(10.0, 10.0, 0.0, 0.0, 1.0, 0.5)] * 5
    pts += [(350.0, 350.0, 0.0, 0.0, 4.0, 2.0)]
    res = speed_amplification(synth_log(pts), TriggerRegion(), window=50)
    assert abs(res.ratio - 4.0) < 1e-12


def test_amplification_validation():
    region = TriggerRegion()
    never = synth_log([(10.0, 10.0, 0.0, 0.0, 1.0, 1.0)] * 3)
    with pytest.raises(ValueError, match="never enters"):
        speed_amplification(never, region)
    starts_in = synth_log([(350.0, 350.0, 0.0, 0.0, 1.0, 1.0)] * 3)
    with pytest.raises(ValueError, match="starts inside"):
        speed_amplification(starts_in, region)
    zero_base = synth_log([(10.0, 10.0, 0.0, 0.0, 1.0, 0.0),
                           (350.0, 350.0, 0.0, 0.0, 1.0, 1.0)])
    with pytest.raises(ValueError, match="zero"):
        speed_amplification(zero_base, region)
    ok = synth_log([(10.0, 10.0, 0.0, 0.0, 1.0, 1.0),
                    (350.0, 350.0, 0.0, 0.0, 1.0, 1.0)])
    with pytest.raises(ValueError, match="window"):
        speed_amplification(ok, region, window=0)
