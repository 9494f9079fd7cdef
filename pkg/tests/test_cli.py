from __future__ import annotations

import json

import networkx as nx
import numpy as np
import pytest

from artifacts import ArtifactManager
from cli import (EXIT_INVALID, EXIT_OK, build_parser, main, nearest_open_pair_snapshots,
                 small_graph_row)
from exact_oracle import SmallGraph, verify_tuza
from tracker import Snapshot, Trajectory


@pytest.fixture
def run(tmp_path, monkeypatch):
    for name in ("TRIANGLE_WORKERS", "TRIANGLE_SEED", "TRIANGLE_OUTPUT_DIR"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.setattr("run_config.load_dotenv", lambda: False)
    out = tmp_path / "results"

    def _run(*argv, config=None):
        config_path = tmp_path / "config.json"
        if config is not None:
            config_path.write_text(json.dumps(config))
        code = main([*argv, "--config", str(config_path), "--out", str(out), "--log-level", "WARNING"])
        return code, out

    return _run


def _json(path):
    return json.loads(path.read_text())


def test_parser_knows_every_subcommand():
    parser = build_parser()
    for name in ("simulate-packing", "simulate-tfp", "ode", "bounds", "verify-small", "scaling"):
        assert parser.parse_args([name]).subcommand == name
    with pytest.raises(SystemExit):
        parser.parse_args(["unknown"])


def test_empty_packing_run(run):
    code, out = run("simulate-packing", "--n", "100", "--k", "0", "--trials", "2")
    assert code == EXIT_OK
    summary = _json(out / "packing_summary.json")
    assert [t["packing_size"] for t in summary["per_trial"]] == [0, 0]
    assert summary["header"]["n"] == 100 and summary["header"]["m"] == 0
    frame = ArtifactManager(str(out)).read_frame(out / "packing_trajectories.csv")
    assert set(frame["step"]) == {0}


def test_packing_runs_are_byte_identical(run):
    argv = ("simulate-packing", "--n", "60", "--k", "0.5", "--trials", "2", "--checkpoints", "4",
            "--samples", "8", "--seed", "77")
    _, out = run(*argv)
    first = [(out / name).read_bytes() for name in ("packing_trajectories.csv", "packing_summary.json")]
    run(*argv)
    second = [(out / name).read_bytes() for name in ("packing_trajectories.csv", "packing_summary.json")]
    assert first == second
    summary = _json(out / "packing_summary.json")
    assert all(t["valid"] for t in summary["per_trial"])


def test_tfp_run_writes_cover_summary(run):
    code, out = run("simulate-tfp", "--n", "80", "--k", "0.4", "--trials", "2", "--checkpoints", "4")
    assert code in (0, 1)
    summary = _json(out / "tfp_summary.json")
    assert all(t["valid"] for t in summary["per_trial"])
    assert summary["mean_accepted"] + summary["mean_cover_size"] == summary["header"]["m"]
    assert summary["open_pairs_max_relative_error"] is not None


def test_ode_command(run):
    code, out = run("ode", "--h", "1e-3")
    assert code == EXIT_OK
    report = _json(out / "ode_report.json")
    assert report["verdicts"]["y_reaches_zeta"]
    assert report["max_residual"] < 1e-6
    assert (out / "ode_Y.csv").exists() and (out / "ode_Z.dat").exists()


def test_bounds_command(run):
    code, out = run("bounds")
    assert code == EXIT_OK
    report = _json(out / "appendix_report.json")
    assert report["passed"]
    assert report["table_max_ratio"] < 2.0
    assert (out / "bounds.csv").exists()


def test_bounds_rejects_coarse_grid(run):
    code, _ = run("bounds", "--grid-step", "0.01")
    assert code == EXIT_INVALID


def test_verify_small(run, tmp_path):
    edge_file = tmp_path / "k4.txt"
    edge_file.write_text("0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n")
    code, out = run("verify-small", "--max-n", "4", "--random", "5", "--graph-file", str(edge_file))
    assert code == EXIT_OK
    frame = ArtifactManager(str(out)).read_frame(out / "small_graphs.csv")
    assert len(frame) == 1 + 1 + 19 + 5
    k4 = frame[frame["source"] == "k4"].iloc[0]
    assert (k4["nu"], k4["tau"], bool(k4["holds"])) == (1, 2, True)
    random_rows = frame[frame["source"] == "random"]
    assert (random_rows["tfp_cover"] >= random_rows["tau"]).all()
    assert (random_rows["process_packing"] <= random_rows["nu"]).all()
    assert frame["holds"].all() and frame["sound"].all()
    summary = _json(out / "small_graphs_summary.json")
    assert summary["all_hold"] and summary["conjectured_ratio"] == 1.5


def test_small_graph_row_checks_both_online_processes():
    k4 = SmallGraph.from_networkx(nx.complete_graph(4), name="K4")
    row = small_graph_row(k4, "k4", limit=1000, rng=np.random.default_rng(3))
    tuza = verify_tuza(k4)
    assert (row["nu"], row["tau"], row["fractional"]) == (tuza.nu, tuza.tau, tuza.fractional)
    assert row["process_packing"] == 1
    assert row["tfp_cover"] >= row["tau"] == 2
    assert row["sound"] and row["holds"]
    assert small_graph_row(k4, "k4", limit=1000)["tfp_cover"] is None


def test_nearest_open_pair_snapshots():
    traj = Trajectory(n=50, m=100, seed=0, process="tfp")
    for step, t_hat in enumerate((0.0, 0.22, 0.31, 0.47)):
        snap = Snapshot(step=step, t=t_hat)
        snap.add_family("open_pairs", [0.01 * step])
        snap.extras["t_hat"] = t_hat
        traj.add(snap)
    nearest = nearest_open_pair_snapshots(traj)
    assert {target: snap.step for target, snap in nearest.items()} == {0.25: 1, 0.5: 3}
    assert nearest_open_pair_snapshots(traj, targets=(0.9,)) == {}


def test_oracle_guard_exits_with_refusal(run, tmp_path):
    edge_file = tmp_path / "k8.txt"
    edge_file.write_text("".join(f"{u} {v}\n" for u in range(8) for v in range(u + 1, 8)))
    code, _ = run("verify-small", "--max-n", "0", "--random", "0", "--graph-file", str(edge_file),
                  config={"guards": {"oracle_triangle_limit": 10}})
    assert code == EXIT_INVALID


def test_scaling_command(run):
    code, out = run("scaling", "--process", "tfp", "--ns", "30", "60", "--k", "0.5", "--trials", "2",
                    "--checkpoints", "2")
    assert code in (0, 1)
    frame = ArtifactManager(str(out)).read_frame(out / "scaling_tfp.csv")
    assert sorted(set(frame["n"])) == [30, 60]
    assert "slope" in frame.columns


@pytest.mark.slow
def test_packing_tracks_the_lower_bound_at_desk_scale(run):
    code, out = run("simulate-packing", "--n", "10000", "--k", "1", "--trials", "5", "--workers", "5")
    summary = _json(out / "packing_summary.json")
    assert summary["relative_error"] <= 0.03
    assert summary["bands"]["d_U"] == pytest.approx(0.08)
    assert all(report["passed"] for report in summary["concentration"])
    assert code == EXIT_OK


@pytest.mark.slow
def test_concentration_improves_with_n(run):
    code, out = run("scaling", "--process", "packing", "--ns", "3000", "10000", "30000", "--k", "1",
                    "--trials", "5", "--workers", "5")
    assert _json(out / "scaling_packing.json")["passed"]
    assert code == EXIT_OK


@pytest.mark.slow
def test_triangle_free_process_at_desk_scale(run):
    code, out = run("simulate-tfp", "--n", "10000", "--k", "1", "--trials", "5", "--workers", "5")
    assert _json(out / "tfp_summary.json")["relative_error"] <= 0.03
    code, out = run("simulate-tfp", "--n", "2000", "--k", "0.7", "--trials", "1", "--checkpoints", "50")
    summary = _json(out / "tfp_summary.json")
    assert summary["a_k"] >= 0.5
    at_targets = summary["open_pairs_at_t_hat"]
    assert set(at_targets) == {"0.25", "0.5"}
    assert all(error is not None and error <= 0.05 for error in at_targets.values())
    assert summary["open_pairs_within_tolerance"]
