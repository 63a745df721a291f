import numpy as np
import pytest

from drivegate.datasets import TriggerRegion
from drivegate.gating import GateCommand, geometric_controller
from drivegate.kinematics import RobotPose, WheelSpeeds
from drivegate.simulator import (
    STATUS_COMPLETED,
    STATUS_HALTED,
    STATUS_STEP_CAP,
    TRAJECTORY_COLUMNS,
    ScenarioConfig,
    TrajectoryLog,
    default_square_path,
    first_region_entry,
    load_trajectory,
    replay_mismatches,
    run_scenario,
    save_trajectory,
)


def fixed_controller(omega_l, omega_r, m=1.0):
    applied = WheelSpeeds(m * omega_l, m * omega_r)

    def run(pose, goal):
        return GateCommand(WheelSpeeds(omega_l, omega_r), m, applied)
    return run


def test_default_path_shape():
    path = default_square_path()
    assert len(path) == 7
    assert path[0] == (50.0, 50.0)
    assert path[-1] == (350.0, 350.0)


def test_geometric_run_completes():
    log = run_scenario(ScenarioConfig(), geometric_controller(), "geometric")
    assert log.status == STATUS_COMPLETED
    assert log.waypoints_reached == 7
    # final pose is within tolerance of the last waypoint
    assert np.hypot(log.final_pose.x - 350.0, log.final_pose.y - 350.0) <= 5.0
    assert 300 < len(log) < 1200
    assert log.controller_kind == "geometric"


def test_run_is_deterministic():
    a = run_scenario(ScenarioConfig(), geometric_controller())
    b = run_scenario(ScenarioConfig(), geometric_controller())
    assert np.array_equal(a.rows, b.rows)
    assert a.status == b.status


def test_waypoint_at_start_completes_immediately():
    cfg = ScenarioConfig(waypoints=[(50.0, 50.0)])
    log = run_scenario(cfg, geometric_controller())
    assert log.status == STATUS_COMPLETED
    assert len(log) == 0
    assert log.waypoints_reached == 1


def test_step_cap():
    cfg = ScenarioConfig(waypoints=[(350.0, 350.0)], max_steps=10)
    log = run_scenario(cfg, geometric_controller())
    assert log.status == STATUS_STEP_CAP
    assert len(log) == 10
    assert log.waypoints_reached == 0


def test_at_most_one_waypoint_advance_per_step():
    # two coincident waypoints at the start pose take two steps to clear
    cfg = ScenarioConfig(waypoints=[(50.0, 50.0), (50.0, 50.0), (120.0, 50.0)])
    log = run_scenario(cfg, geometric_controller())
    assert log.status == STATUS_COMPLETED
    gx = log.column("goal_x")
    assert gx[0] == 50.0
    assert gx[1] == 120.0


def test_halt_detector_fires_after_window():
    cfg = ScenarioConfig(waypoints=[(350.0, 350.0)], halt_window=25)
    log = run_scenario(cfg, fixed_controller(2.0, 2.0, m=0.0))
    assert log.status == STATUS_HALTED
    assert len(log) == 25
    # robot never moved
    assert log.final_pose.x == 50.0 and log.final_pose.y == 50.0


def test_halt_streak_resets_on_fast_step():
    calls = {"n": 0}

    def run(pose, goal):
        calls["n"] += 1
        # one fast step every 20 keeps the streak below the window
        w = 1.0 if calls["n"] % 20 == 0 else 0.0
        return GateCommand(WheelSpeeds(1.0, 1.0), w, WheelSpeeds(w, w))

    cfg = ScenarioConfig(waypoints=[(350.0, 350.0)], max_steps=200, halt_window=25)
    log = run_scenario(cfg, run)
    assert log.status == STATUS_STEP_CAP


def test_halt_threshold_is_exclusive():
    cfg = ScenarioConfig(waypoints=[(350.0, 350.0)], max_steps=60,
                         halt_threshold=0.05)
    # speeds exactly at the threshold never count as halted
    log = run_scenario(cfg, fixed_controller(0.05, 0.05))
    assert log.status == STATUS_STEP_CAP


def test_log_columns_and_time_axis():
    cfg = ScenarioConfig(waypoints=[(150.0, 50.0)])
    log = run_scenario(cfg, geometric_controller())
    assert log.rows.shape[1] == len(TRAJECTORY_COLUMNS)
    assert np.array_equal(log.column("k"), np.arange(len(log), dtype=float))
    assert np.allclose(log.column("t"), log.column("k") * cfg.dt)
    assert np.all(log.column("m") == 1.0)


def test_replay_is_bit_exact():
    log = run_scenario(ScenarioConfig(), geometric_controller())
    assert replay_mismatches(log) == 0


def test_replay_detects_corruption():
    log = run_scenario(ScenarioConfig(waypoints=[(150.0, 50.0)]), geometric_controller())
    log.rows[10, 2] += 1e-9
    # the corrupt row breaks both its own check and the next transition
    assert replay_mismatches(log) == 2


def test_save_load_round_trip(tmp_path):
    log = run_scenario(ScenarioConfig(), geometric_controller(), "geometric")
    csv = tmp_path / "run.csv"
    save_trajectory(log, csv)
    back = load_trajectory(csv)
    assert np.array_equal(back.rows, log.rows)
    assert back.status == log.status
    assert back.waypoints_reached == log.waypoints_reached
    assert back.controller_kind == "geometric"
    assert back.final_pose == log.final_pose
    assert back.config.waypoints == log.config.waypoints
    assert back.config.dt == log.config.dt
    # a loaded log replays exactly too; full precision survived the CSV
    assert replay_mismatches(back) == 0


def test_load_rejects_wrong_header(tmp_path):
    csv = tmp_path / "bad.csv"
    csv.write_text("a,b,c\n")
    (tmp_path / "bad.csv.status.json").write_text(
        '{"status": "completed", "steps": 0, "final_pose": [0, 0, 0],'
        ' "waypoints_reached": 0, "config": %s}\n'
        % __import__("json").dumps(ScenarioConfig().to_dict()))
    with pytest.raises(ValueError, match="header"):
        load_trajectory(csv)


def test_load_reports_bad_line_number(tmp_path):
    log = run_scenario(ScenarioConfig(waypoints=[(120.0, 50.0)]), geometric_controller())
    csv = tmp_path / "run.csv"
    save_trajectory(log, csv)
    lines = csv.read_text().splitlines()
    lines[3] = "1,2,3"
    csv.write_text("\n".join(lines) + "\n")
    with pytest.raises(ValueError, match=":4:"):
        load_trajectory(csv)


def test_config_validation():
    with pytest.raises(ValueError):
        run_scenario(ScenarioConfig(waypoints=[]), geometric_controller())
    with pytest.raises(ValueError):
        run_scenario(ScenarioConfig(dt=0.0), geometric_controller())
    with pytest.raises(ValueError):
        run_scenario(ScenarioConfig(max_steps=0), geometric_controller())
    with pytest.raises(ValueError):
        run_scenario(ScenarioConfig(goal_tolerance=-1.0), geometric_controller())
    with pytest.raises(ValueError):
        run_scenario(ScenarioConfig(halt_window=0), geometric_controller())


def test_config_dict_round_trip():
    cfg = ScenarioConfig(waypoints=[(1.0, 2.0), (3.0, 4.0)],
                         initial_pose=RobotPose(1.0, 2.0, 0.25),
                         dt=0.1, goal_tolerance=2.0, max_steps=500)
    back = ScenarioConfig.from_dict(cfg.to_dict())
    assert back == cfg


def test_first_region_entry():
    log = run_scenario(ScenarioConfig(), geometric_controller())
    region = TriggerRegion()
    k0 = first_region_entry(log, region)
    assert k0 is not None
    x, y = log.rows[k0, 2], log.rows[k0, 3]
    assert region.contains(x, y)
    assert not region.contains(log.rows[k0 - 1, 2], log.rows[k0 - 1, 3])
    # a region off the route is never entered
    off_route = TriggerRegion(0.0, 20.0, 380.0, 400.0)
    assert first_region_entry(log, off_route) is None
