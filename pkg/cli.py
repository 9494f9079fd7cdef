"""Command-line experiments: packing and triangle-free simulations, ODEs, bounds, small graphs.

    python cli.py simulate-packing --n 10000 --k 1 --trials 5
    python cli.py bounds --grid-step 1e-3
    python cli.py verify-small --max-n 7
"""
import argparse
import logging
import math
import sys
from multiprocessing import Pool
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import pandas as pd
from tqdm import tqdm

from artifacts import get_artifact_manager
from bounds import appendix_report, bounds_table, k_grid, l_nu_star, ratio_summary, u_tau
from exact_oracle import (SmallGraph, all_small_graphs, parse_edge_list, random_small_graphs,
                          read_graph6_lines, verify_tuza)
from exceptions import GuardExceededError, TriangleProcessError
from graph_core import EdgeId, ProcessState
from ode_engine import (ZETA, System, integrate, master_equation_residual, richardson_order,
                        solution_covering)
from packing_process import even_checkpoints, packing_is_valid, packing_step, run_packing
from run_config import CONFIG_PATH, RunConfig, build_run_config, load_config, split_seed
from tfp_process import TfpState, cover_is_valid, fa_band, run_tfp, tfp_step
from tracker import (VERDICT_FAMILIES, SamplingConfig, Snapshot, Trajectory, calibrated_bands,
                     concentration_report, decreasing_in_n, scaling_report)

EXIT_OK = 0
EXIT_VERDICT_FAILED = 1
EXIT_INVALID = 2

RESIDUAL_TIMES = (0.1, 0.5, 1.0, 2.0)
RESIDUAL_TOLERANCE = 1e-6
RICHARDSON_T = 0.5
RICHARDSON_H = 0.02
RICHARDSON_TOLERANCE = 0.5
FA_BETA = 0.25
CONJECTURED_RATIO = 1.5
ODE_EXPORT_STEP = 1e-3
OPEN_PAIR_TARGETS = (0.25, 0.5)
OPEN_PAIR_REACH = 0.05


def _sampling(cfg: RunConfig) -> SamplingConfig:
    return SamplingConfig(vertices=cfg.samples_vertices, pairs=cfg.samples_pairs, edges=cfg.samples_edges)


def _checkpoints(cfg: RunConfig, m: int) -> List[int]:
    return even_checkpoints(m, cfg.checkpoints)


def _packing_trial(job: Tuple) -> Dict:
    n, m, seed, trial, checkpoints, sampling = job
    state, packing, trajectory = run_packing(n, m, seed, checkpoints, trial=trial, sampling=sampling)
    return {
        "trial": trial,
        "packing_size": len(packing),
        "unmatched_edges": state.unmatched_edge_count(),
        "valid": packing_is_valid(packing, state.revealed_edges()) and not state.invariant_violations(),
        "trajectory": trajectory,
    }


def _tfp_trial(job: Tuple) -> Dict:
    n, m, seed, trial, checkpoints, open_pairs_limit = job
    state, cover, trajectory = run_tfp(n, m, seed, checkpoints, trial=trial,
                                       open_pairs_limit=open_pairs_limit)
    return {
        "trial": trial,
        "accepted": state.accepted_count,
        "cover_size": len(cover),
        "valid": cover_is_valid(cover, state.revealed_edges()),
        "trajectory": trajectory,
    }


def run_trials(worker: Callable[[Tuple], Dict], jobs: Sequence[Tuple], workers: int,
               desc: str = "trials") -> List[Dict]:
    """Run independent trial jobs, in a process pool when workers > 1; results keep job order."""
    jobs = list(jobs)
    if workers > 1 and len(jobs) > 1:
        with Pool(processes=min(workers, len(jobs))) as pool:
            return list(tqdm(pool.imap(worker, jobs), total=len(jobs), desc=desc))
    return [worker(job) for job in tqdm(jobs, desc=desc)]


def _trajectory_frame(results: List[Dict]) -> pd.DataFrame:
    return pd.concat([r["trajectory"].to_frame() for r in results], ignore_index=True)


def nearest_open_pair_snapshots(traj: Trajectory, targets: Sequence[float] = OPEN_PAIR_TARGETS,
                                reach: float = OPEN_PAIR_REACH) -> Dict[float, Snapshot]:
    """Open-pair snapshot nearest each target t_hat; targets the run never came within reach of are omitted."""
    counted = [snap for snap in traj.snapshots if "open_pairs" in snap.stats and "t_hat" in snap.extras]
    nearest = {}
    for target in targets:
        if not counted:
            break
        snap = min(counted, key=lambda s: abs(s.extras["t_hat"] - target))
        if abs(snap.extras["t_hat"] - target) <= reach:
            nearest[target] = snap
    return nearest


def _within(observed: float, predicted: float, rel: float) -> Tuple[float, bool]:
    if predicted == 0:
        return abs(observed), observed == 0
    error = abs(observed - predicted) / predicted
    return error, error <= rel


def cmd_simulate_packing(cfg: RunConfig) -> int:
    m, n15 = cfg.m, cfg.n ** 1.5
    checkpoints = _checkpoints(cfg, m)
    jobs = [(cfg.n, m, cfg.seed, trial, checkpoints, _sampling(cfg)) for trial in range(cfg.trials)]
    results = run_trials(_packing_trial, jobs, cfg.workers, desc="packing")

    ysol = solution_covering(System.Y, cfg.k)
    sizes = [r["packing_size"] for r in results]
    mean_size = float(np.mean(sizes))
    predicted = l_nu_star(cfg.k, ysol) * n15
    rel_error, size_ok = _within(mean_size, predicted, cfg.packing_rel)
    bands = calibrated_bands(cfg.band, cfg.n, m / n15 if n15 else 0.0)
    reports = [concentration_report(r["trajectory"], bands) for r in results]

    manager = get_artifact_manager(cfg.out)
    header = cfg.header()
    manager.write_frame("packing_trajectories.csv", _trajectory_frame(results), header)
    summary = {
        "per_trial": [{"trial": r["trial"], "packing_size": r["packing_size"],
                       "unmatched_edges": r["unmatched_edges"], "valid": r["valid"]} for r in results],
        "mean_packing_size": mean_size,
        "mean_scaled": mean_size / n15 if n15 else math.nan,
        "y_k": ysol(cfg.k),
        "predicted_size": predicted,
        "relative_error": rel_error,
        "size_within_tolerance": size_ok,
        "bands": bands,
        "concentration": [report.to_dict() for report in reports],
    }
    manager.write_json("packing_summary.json", summary, header)

    print(f"packing: mean size {mean_size:.1f} vs L_nu*(k) n^1.5 = {predicted:.1f} "
          f"(relative error {rel_error:.4f})")
    passed = size_ok and all(r["valid"] for r in results) and all(report.passed for report in reports)
    if not size_ok:
        logging.warning(f"mean packing size misses the prediction by {rel_error:.4f} > {cfg.packing_rel}")
    for report in reports:
        failed = {family: round(bands[family], 4) for family, ok in report.verdicts.items() if not ok}
        if failed:
            logging.warning(f"concentration bands exceeded (family: band) {failed}")
    return EXIT_OK if passed else EXIT_VERDICT_FAILED


def cmd_simulate_tfp(cfg: RunConfig) -> int:
    m, n15 = cfg.m, cfg.n ** 1.5
    checkpoints = _checkpoints(cfg, m)
    if cfg.n > cfg.open_pairs_limit:
        logging.warning(f"open-pair counts skipped: n={cfg.n} > limit {cfg.open_pairs_limit}")
    jobs = [(cfg.n, m, cfg.seed, trial, checkpoints, cfg.open_pairs_limit) for trial in range(cfg.trials)]
    results = run_trials(_tfp_trial, jobs, cfg.workers, desc="triangle-free")

    asol = solution_covering(System.A, cfg.k)
    a_k = asol(cfg.k)
    mean_accepted = float(np.mean([r["accepted"] for r in results]))
    mean_cover = float(np.mean([r["cover_size"] for r in results]))
    rel_error, accepted_ok = _within(mean_accepted, a_k * n15, cfg.tfp_rel)

    open_pair_errors = []
    target_errors: Dict[str, List[float]] = {f"{target:g}": [] for target in OPEN_PAIR_TARGETS}
    for r in results:
        for snap in r["trajectory"].snapshots:
            if "open_pairs" in snap.stats and snap.step > 0:
                open_pair_errors.append(snap.stats["open_pairs"]["max"])
        for target, snap in nearest_open_pair_snapshots(r["trajectory"]).items():
            target_errors[f"{target:g}"].append(snap.stats["open_pairs"]["max"])
    open_pairs_ok = all(err <= cfg.open_pairs_rel for errors in target_errors.values() for err in errors)

    manager = get_artifact_manager(cfg.out)
    header = cfg.header()
    manager.write_frame("tfp_trajectories.csv", _trajectory_frame(results), header)
    summary = {
        "per_trial": [{"trial": r["trial"], "accepted": r["accepted"], "cover_size": r["cover_size"],
                       "valid": r["valid"]} for r in results],
        "mean_accepted": mean_accepted,
        "mean_cover_size": mean_cover,
        "a_k": a_k,
        "predicted_accepted": a_k * n15,
        "relative_error": rel_error,
        "accepted_within_tolerance": accepted_ok,
        "cover_scaled": mean_cover / n15 if n15 else math.nan,
        "u_tau": u_tau(cfg.k, asol).value,
        "open_pairs_max_relative_error": max(open_pair_errors) if open_pair_errors else None,
        "open_pairs_at_t_hat": {target: max(errors) if errors else None
                                for target, errors in target_errors.items()},
        "open_pairs_within_tolerance": open_pairs_ok,
        "fa_band": fa_band(cfg.n, cfg.k, FA_BETA, a_k) if cfg.n > 1 else None,
    }
    manager.write_json("tfp_summary.json", summary, header)

    print(f"triangle-free: mean accepted {mean_accepted:.1f} vs a(k) n^1.5 = {a_k * n15:.1f} "
          f"(relative error {rel_error:.4f}); mean cover {mean_cover:.1f}")
    if not accepted_ok:
        logging.warning(f"accepted edges miss a(k) n^1.5 by {rel_error:.4f} > {cfg.tfp_rel}")
    if not open_pairs_ok:
        logging.warning(f"open-pair count off by more than {cfg.open_pairs_rel}")
    passed = accepted_ok and open_pairs_ok and all(r["valid"] for r in results)
    return EXIT_OK if passed else EXIT_VERDICT_FAILED


def cmd_ode(cfg: RunConfig) -> int:
    manager = get_artifact_manager(cfg.out)
    header = cfg.header()
    solutions = {which: integrate(which, cfg.t_end, cfg.h) for which in System}
    stride = max(1, int(round(ODE_EXPORT_STEP / solutions[System.Y].h)))
    for which, sol in solutions.items():
        frame = sol.to_frame().iloc[::stride]
        manager.write_frame(f"ode_{which.value}.csv", frame, header)
        manager.write_gnuplot(f"ode_{which.value}.dat", frame, ["t", "value"])

    ysol = solutions[System.Y]
    residuals = []
    for t in RESIDUAL_TIMES:
        if t > ysol.t_end:
            continue
        for b in range(4):
            for c in range(4):
                res = master_equation_residual(ysol, t, b, c)
                residuals.append({"t": t, "b": b, "c": c, "res_q": res.res_q, "res_r": res.res_r,
                                  "res_s": res.res_s})
    residual_frame = pd.DataFrame(residuals, columns=["t", "b", "c", "res_q", "res_r", "res_s"])
    manager.write_frame("master_residuals.csv", residual_frame, header)
    worst = float(residual_frame[["res_q", "res_r", "res_s"]].to_numpy().max()) if residuals else 0.0

    y_values = ysol.values
    y_end = float(y_values[-1])
    orders = {which.value: richardson_order(which, RICHARDSON_T, RICHARDSON_H) for which in System}
    verdicts = {
        "y_monotone": bool(np.all(np.diff(y_values) >= -1e-12)),
        "y_concave": bool(np.all(np.diff(ysol.derivatives) <= 1e-12)),
        "y_reaches_zeta": bool(ZETA - 1e-4 <= y_end <= ZETA + 1e-12) if cfg.t_end >= 5.0 else True,
        "residuals_small": worst < RESIDUAL_TOLERANCE,
        "richardson_order_4": all(abs(order - 4.0) < RICHARDSON_TOLERANCE for order in orders.values()),
    }
    report = {"passed": all(verdicts.values()), "verdicts": verdicts, "y_end": y_end, "zeta": ZETA,
              "max_residual": worst, "richardson_order": orders}
    manager.write_json("ode_report.json", report, header)
    print(f"ode: y({cfg.t_end:g}) = {y_end:.8f} (zeta {ZETA:.8f}); max residual {worst:.3e}; "
          f"orders {', '.join(f'{k}={v:.2f}' for k, v in orders.items())}")
    return EXIT_OK if report["passed"] else EXIT_VERDICT_FAILED


def cmd_bounds(cfg: RunConfig) -> int:
    manager = get_artifact_manager(cfg.out)
    header = cfg.header()
    table = bounds_table(k_grid(cfg.k_min, cfg.k_max, cfg.grid_step))
    manager.write_frame("bounds.csv", table.frame, header)
    manager.write_gnuplot("bounds.dat", table.frame, ["k", "l_nu_star", "l_nu", "u_tau", "ratio"])
    report = appendix_report(cfg.grid_step)
    max_ratio, argmax_k = ratio_summary(table)
    payload = report.to_dict()
    payload.update({"table_max_ratio": max_ratio, "table_argmax_k": argmax_k})
    manager.write_json("appendix_report.json", payload, header)
    print(report.text())
    return EXIT_OK if report.passed else EXIT_VERDICT_FAILED


SMALL_GRAPH_COLUMNS = ["source", "name", "graph6", "n", "m", "triangles", "nu", "tau", "fractional",
                       "max_cut_cover", "process_packing", "tfp_cover", "ratio", "holds", "sound"]


def online_packing_size(g: SmallGraph, rng: np.random.Generator) -> int:
    """Packing found by the online process revealing g's edges in a random order."""
    state = ProcessState(g.n)
    for index in rng.permutation(g.m).tolist():
        u, v = g.edges[index]
        packing_step(state, EdgeId(u, v), rng)
    return len(state.matched_triangles)


def online_cover_size(g: SmallGraph, rng: np.random.Generator) -> int:
    """Rejected edges of the triangle-free process revealing g's edges in a random order."""
    if g.n == 0:
        return 0
    state = TfpState(g.n)
    for index in rng.permutation(g.m).tolist():
        u, v = g.edges[index]
        tfp_step(state, EdgeId(u, v))
    return len(state.rejected)


def small_graph_row(g: SmallGraph, source: str, limit: int,
                    rng: Optional[np.random.Generator] = None) -> Dict:
    result = verify_tuza(g, limit)
    nu, tau, cut_cover = result.nu, result.tau, result.max_cut_cover
    process = online_packing_size(g, rng) if rng is not None else None
    cover = online_cover_size(g, rng) if rng is not None else None
    sound = (nu <= tau <= 3 * nu and tau <= cut_cover and 2 * cut_cover <= g.m
             and (process is None or process <= nu) and (cover is None or tau <= cover))
    return {
        "source": source, "name": g.name, "graph6": g.to_graph6(), "n": g.n, "m": g.m,
        "triangles": len(g.triangles), "nu": nu, "tau": tau, "fractional": result.fractional,
        "max_cut_cover": cut_cover, "process_packing": process, "tfp_cover": cover,
        "ratio": result.ratio, "holds": result.holds, "sound": sound,
    }


def _small_graphs(cfg: RunConfig) -> List[Tuple[str, SmallGraph]]:
    graphs = [("k4", SmallGraph.from_networkx(nx.complete_graph(4), name="K4"))]
    if cfg.graph_file:
        with open(cfg.graph_file, "r") as f:
            graphs.append(("edge-list", parse_edge_list(f.read(), name=cfg.graph_file)))
    if cfg.graph6_file:
        with open(cfg.graph6_file, "r") as f:
            graphs.extend(("graph6", g) for g in read_graph6_lines(f))
    if cfg.max_n_small > 0:
        graphs.extend(("exhaustive", g) for g in all_small_graphs(cfg.max_n_small))
    return graphs


def cmd_verify_small(cfg: RunConfig) -> int:
    limit = cfg.oracle_triangle_limit
    rows = [small_graph_row(g, source, limit)
            for source, g in tqdm(_small_graphs(cfg), desc="small graphs")]
    if cfg.random_small_graphs > 0:
        rng, process_rng = split_seed(cfg.seed, 0)
        samples = random_small_graphs(cfg.random_small_n, cfg.random_small_m, cfg.random_small_graphs, rng)
        rows.extend(small_graph_row(g, "random", limit, process_rng)
                    for g in tqdm(samples, total=cfg.random_small_graphs, desc="random graphs"))
    frame = pd.DataFrame(rows, columns=SMALL_GRAPH_COLUMNS)

    with_triangles = frame[frame["nu"] > 0]
    ratios = with_triangles["ratio"]
    summary = {
        "graphs": len(frame),
        "all_hold": bool(frame["holds"].all()),
        "all_sound": bool(frame["sound"].all()),
        "counterexamples": frame.loc[~frame["holds"], "graph6"].tolist(),
        "ratio_mean": float(ratios.mean()) if len(ratios) else None,
        "ratio_max": float(ratios.max()) if len(ratios) else None,
        "ratio_above_conjectured": int((ratios > CONJECTURED_RATIO).sum()),
        "conjectured_ratio": CONJECTURED_RATIO,
    }
    manager = get_artifact_manager(cfg.out)
    header = cfg.header()
    manager.write_frame("small_graphs.csv", frame, header)
    manager.write_json("small_graphs_summary.json", summary, header)
    print(f"small graphs: {summary['graphs']} checked, tau <= 2 nu on all: {summary['all_hold']}, "
          f"max tau/nu {summary['ratio_max']}")
    return EXIT_OK if summary["all_hold"] and summary["all_sound"] else EXIT_VERDICT_FAILED


def cmd_scaling(cfg: RunConfig) -> int:
    runs: Dict[int, List[Trajectory]] = {}
    for n in cfg.scaling_ns:
        m = int(math.floor(cfg.k * n ** 1.5))
        checkpoints = _checkpoints(cfg, m)
        if cfg.process == "packing":
            jobs = [(n, m, cfg.seed, trial, checkpoints, _sampling(cfg)) for trial in range(cfg.trials)]
            results = run_trials(_packing_trial, jobs, cfg.workers, desc=f"packing n={n}")
        else:
            jobs = [(n, m, cfg.seed, trial, checkpoints, 0) for trial in range(cfg.trials)]
            results = run_trials(_tfp_trial, jobs, cfg.workers, desc=f"triangle-free n={n}")
        runs[n] = [r["trajectory"] for r in results]
    report = scaling_report(runs)
    families = VERDICT_FAMILIES if cfg.process == "packing" else ("accepted",)
    verdicts = {family: decreasing_in_n(report, family) for family in families}

    manager = get_artifact_manager(cfg.out)
    header = cfg.header()
    manager.write_frame(f"scaling_{cfg.process}.csv", report, header)
    manager.write_json(f"scaling_{cfg.process}.json",
                       {"passed": all(verdicts.values()), "decreasing_in_n": verdicts}, header)
    for family, ok in verdicts.items():
        if not ok:
            logging.warning(f"mean deviation of {family} does not decrease in n")
    return EXIT_OK if all(verdicts.values()) else EXIT_VERDICT_FAILED


COMMANDS: Dict[str, Callable[[RunConfig], int]] = {
    "simulate-packing": cmd_simulate_packing,
    "simulate-tfp": cmd_simulate_tfp,
    "ode": cmd_ode,
    "bounds": cmd_bounds,
    "verify-small": cmd_verify_small,
    "scaling": cmd_scaling,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=CONFIG_PATH, help="JSON configuration file")
    common.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    common.add_argument("--n", type=int)
    common.add_argument("--k", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--checkpoints", type=int)
    common.add_argument("--out")
    common.add_argument("--grid-step", dest="grid_step", type=float)
    common.add_argument("--band", type=float)
    common.add_argument("--samples", type=int, help="sampled vertices, pairs and edges per checkpoint")
    common.add_argument("--workers", type=int)
    common.add_argument("--t-end", dest="t_end", type=float)
    common.add_argument("--h", type=float)

    parser = argparse.ArgumentParser(prog="cli.py", description=__doc__.splitlines()[0])
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for name in ("simulate-packing", "simulate-tfp", "ode", "bounds"):
        subparsers.add_parser(name, parents=[common])
    small = subparsers.add_parser("verify-small", parents=[common])
    small.add_argument("--graph-file", dest="graph_file", help="edge list, one 'u v' per line")
    small.add_argument("--graph6", dest="graph6_file", help="file with one graph6 string per line")
    small.add_argument("--max-n", dest="max_n_small", type=int)
    small.add_argument("--random", dest="random_small_graphs", type=int)
    scaling = subparsers.add_parser("scaling", parents=[common])
    scaling.add_argument("--process", choices=["packing", "tfp"])
    scaling.add_argument("--ns", dest="scaling_ns", type=int, nargs="+")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format="%(asctime)s %(levelname)s %(message)s")
    overrides = {key: value for key, value in vars(args).items() if key not in ("config", "log_level")}
    try:
        cfg = build_run_config(overrides, load_config(args.config))
        return COMMANDS[cfg.subcommand](cfg)
    except GuardExceededError as e:
        logging.error(f"Refused: {e}")
        return EXIT_INVALID
    except TriangleProcessError as e:
        logging.error(f"Error: {e}")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
