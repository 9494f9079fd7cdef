from __future__ import annotations

import math

import numpy as np
import pytest

from exceptions import ArgumentError, EmptyTrajectoryError
from graph_core import ProcessState
from ode_engine import System, get_solution
from tracker import (TRAJECTORY_COLUMNS, SamplingConfig, Snapshot, Trajectory, c_max_bound,
                     calibrated_bands, concentration_report, decreasing_in_n, final_mean_deviation,
                     record_checkpoint, sample_pairs, sample_vertices, scaling_report)


def _trajectory(n, values, trial=0):
    traj = Trajectory(n=n, m=100, seed=1, process="packing", trial=trial)
    for step, value in enumerate(values):
        snap = Snapshot(step=step, t=step / 10)
        snap.add_family("d_U", [value, -value])
        snap.add_family("R", [value / 2])
        traj.add(snap)
    return traj


def test_step_zero_snapshot():
    n = 300
    snap = record_checkpoint(ProcessState(n), get_solution(System.Y), SamplingConfig(),
                             np.random.default_rng(0))
    assert snap.step == 0 and snap.t == 0.0
    assert snap.stats["d_U"]["max"] == 0.0
    assert snap.stats["d_G"]["max"] == 0.0
    assert snap.stats["R"]["max"] == pytest.approx(1 / n)
    assert snap.stats["Q"]["mean"] == pytest.approx(2 / (9 * n))
    assert snap.stats["S"]["max"] == 0.0
    assert snap.extras["identity_violations"] == 0
    assert "K" not in snap.stats


def test_sampling_clips_with_a_warning(caplog):
    rng = np.random.default_rng(0)
    with caplog.at_level("WARNING"):
        vertices = sample_vertices(5, 10, rng)
    assert vertices == [0, 1, 2, 3, 4]
    assert "clipping" in caplog.text
    pairs = sample_pairs(6, 15, rng)
    assert len(set(pairs)) == 15
    assert all(u < v for u, v in pairs)


def test_trajectory_requires_increasing_steps():
    traj = Trajectory(n=10, m=5, seed=0, process="packing")
    traj.add(Snapshot(step=3, t=0.1))
    with pytest.raises(ArgumentError):
        traj.add(Snapshot(step=3, t=0.1))


def test_trajectory_frame_schema():
    traj = _trajectory(100, [0.01, 0.02])
    traj.snapshots[0].extras["y"] = 0.5
    frame = traj.to_frame()
    assert list(frame.columns) == TRAJECTORY_COLUMNS
    assert len(frame) == 2 * 2 * 2 + 1
    assert frame[frame["family"] == "diagnostic"]["statistic"].tolist() == ["y"]


def test_concentration_report_uses_worst_snapshot():
    traj = _trajectory(100, [0.01, 0.04, 0.08])
    report = concentration_report(traj, band=0.05, families=("d_U", "R"))
    assert report.verdicts == {"R": True, "d_U": False}
    assert report.mean_deviation["d_U"] == pytest.approx(0.08)
    assert not report.passed
    assert report.to_dict()["band"] == 0.05


def test_concentration_report_errors():
    with pytest.raises(EmptyTrajectoryError):
        concentration_report(Trajectory(n=10, m=0, seed=0, process="packing"), band=0.05)
    with pytest.raises(ArgumentError):
        concentration_report(_trajectory(10, [0.0]), band=0.0)


def test_scaling_report_slope():
    runs = {n: [_trajectory(n, [0.0, n ** -0.5], trial=t) for t in range(2)] for n in (100, 400, 1600)}
    report = scaling_report(runs, families=["d_U"])
    assert list(report["n"]) == [100, 400, 1600]
    assert report["slope"].iloc[0] == pytest.approx(-0.5)
    assert decreasing_in_n(report, "d_U")
    assert not decreasing_in_n(report, "missing")
    assert final_mean_deviation(runs[100][0]) == {"d_U": pytest.approx(0.1), "R": pytest.approx(0.05)}


def test_c_max_bound():
    assert math.isnan(c_max_bound(10))
    assert c_max_bound(10000) == pytest.approx(3 * math.log(10000) / math.log(math.log(10000)))


def test_calibrated_bands_widen_below_the_calibration_size():
    at_calibration = calibrated_bands(0.05, 10_000, 1.0)
    assert at_calibration["R"] == pytest.approx(0.05)
    assert at_calibration["d_U"] == pytest.approx(0.08)
    assert at_calibration["d_G"] == pytest.approx(2.0 * math.sqrt(2.0) / 10.0)
    small = calibrated_bands(0.05, 625, 1.0)
    assert small["Q"] == pytest.approx(0.1)
    assert small["d_U"] == pytest.approx(0.16)
    assert calibrated_bands(0.05, 10 ** 6, 1.0)["S"] == pytest.approx(0.05)
    assert calibrated_bands(0.05, 100, 0.0)["d_G"] == pytest.approx(0.05)
    with pytest.raises(ArgumentError):
        calibrated_bands(0.0, 100, 1.0)


def test_concentration_report_with_family_bands():
    traj = _trajectory(100, [0.01, 0.07])
    report = concentration_report(traj, {"d_U": 0.08, "R": 0.05}, families=("d_U", "R"))
    assert report.passed
    assert report.to_dict()["band"] == {"d_U": 0.08, "R": 0.05}
    assert not concentration_report(traj, {"d_U": 0.06, "R": 0.05}, families=("d_U", "R")).passed
    with pytest.raises(ArgumentError):
        concentration_report(traj, {"d_U": 0.08}, families=("d_U", "R"))
    with pytest.raises(ArgumentError):
        concentration_report(traj, {"d_U": 0.08, "R": -1.0})


def test_degree_deviation_at_desk_scale_fits_its_band():
    n, t = 10_000, 1.0
    rng = np.random.default_rng(5)
    p = 2.0 * t / math.sqrt(n)
    degrees = rng.binomial(n - 1, p, size=200)
    deviation = np.abs(degrees / math.sqrt(n) - 2.0 * t).mean()
    assert deviation > 0.05
    assert deviation <= calibrated_bands(0.05, n, t)["d_G"]
