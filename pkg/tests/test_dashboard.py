from __future__ import annotations

import pandas as pd
import pytest

from bounds import bounds_table, k_grid
from dashboard import (build_bounds_figure, build_deviation_figure, build_ode_figure,
                       build_ratio_figure, build_small_graph_figure, get_dashboard)
from ode_engine import System, integrate
from tracker import Snapshot, Trajectory


def test_bounds_figures():
    frame = bounds_table(k_grid(0.2, 3.0, 0.1)).frame
    bounds_fig = build_bounds_figure(frame)
    assert [trace.name for trace in bounds_fig.data] == ["l_nu_star", "l_nu", "u_tau"]
    ratio_fig = build_ratio_figure(frame)
    assert len(ratio_fig.data) == 3
    assert ratio_fig.layout.shapes[0].y0 == 2.0


def test_ode_figure_has_one_trace_per_system():
    frames = {which.value: integrate(which, 1.0, 0.01).to_frame() for which in System}
    fig = build_ode_figure(frames)
    assert len(fig.data) == 3
    assert fig.data[0].name == "y(t) packing"


def test_deviation_figure_averages_trials():
    frames = []
    for trial, value in enumerate((0.1, 0.3)):
        traj = Trajectory(n=10, m=5, seed=0, process="packing", trial=trial)
        snap = Snapshot(step=5, t=0.5)
        snap.add_family("d_U", [value])
        snap.extras["y"] = 0.4
        traj.add(snap)
        frames.append(traj.to_frame())
    fig = build_deviation_figure(pd.concat(frames, ignore_index=True), "mean")
    assert len(fig.data) == 1
    assert list(fig.data[0].y) == pytest.approx([0.2])


def test_small_graph_figure_skips_triangle_free_rows():
    frame = pd.DataFrame({"source": ["k4", "exhaustive", "exhaustive"], "nu": [1, 0, 2],
                          "ratio": [2.0, float("nan"), 1.5]})
    fig = build_small_graph_figure(frame)
    assert sum(len(trace.x) for trace in fig.data) == 2


def test_dashboard_singleton_follows_directory(tmp_path):
    first = get_dashboard(str(tmp_path / "a"))
    assert get_dashboard(str(tmp_path / "a")) is first
    assert get_dashboard(str(tmp_path / "b")) is not first
