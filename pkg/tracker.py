"""Empirical trajectories of the packing process against their deterministic counterparts."""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from exceptions import ArgumentError, EmptyTrajectoryError
from graph_core import (ProcessState, a_approx, a_count, a_slack_bound,
                        edges_from_indices, k_count, pair_count, q_histogram, r_histogram,
                        s_histogram)
from ode_engine import OdeSolution, closed_forms_at

VERDICT_FAMILIES = ("d_G", "d_U", "R", "Q", "S")
TRAJECTORY_COLUMNS = ["process", "trial", "step", "t", "family", "statistic", "value"]

# Bands are set at n = 10^4 and widen like n^{-1/4} below it; they never shrink above it.
CALIBRATION_N = 10_000
UNMATCHED_BAND_FACTOR = 1.6
# Mean |Bin - mean| of a revealed degree is about 0.8 sqrt(2t) n^{-1/4} after scaling.
DEGREE_BAND_FACTOR = 2.0


@dataclass(frozen=True)
class SamplingConfig:
    vertices: int = 64
    pairs: int = 64
    edges: int = 64
    c_cap: int = 3
    q_cap: int = 2
    k_terms: int = 40


@dataclass
class Snapshot:
    """Scaled deviations at one step; stats maps family -> {"mean", "max"}."""
    step: int
    t: float
    stats: Dict[str, Dict[str, float]] = field(default_factory=dict)
    extras: Dict[str, float] = field(default_factory=dict)

    def add_family(self, family: str, deviations: Sequence[float]):
        if len(deviations) == 0:
            return
        arr = np.abs(np.asarray(deviations, dtype=float))
        self.stats[family] = {"mean": float(arr.mean()), "max": float(arr.max())}


@dataclass
class Trajectory:
    """Ordered snapshots of one run plus the run metadata."""
    n: int
    m: int
    seed: int
    process: str
    trial: int = 0
    snapshots: List[Snapshot] = field(default_factory=list)

    def add(self, snapshot: Snapshot):
        if self.snapshots and snapshot.step <= self.snapshots[-1].step:
            raise ArgumentError(
                f"snapshot steps must increase ({snapshot.step} after {self.snapshots[-1].step})")
        self.snapshots.append(snapshot)

    def to_frame(self) -> pd.DataFrame:
        """One row per (snapshot, family, statistic); diagnostics use family 'diagnostic'."""
        rows = []
        for snap in self.snapshots:
            for family, stats in snap.stats.items():
                for statistic in ("mean", "max"):
                    rows.append((self.process, self.trial, snap.step, snap.t, family, statistic, stats[statistic]))
            for name, value in snap.extras.items():
                rows.append((self.process, self.trial, snap.step, snap.t, "diagnostic", name, value))
        return pd.DataFrame(rows, columns=TRAJECTORY_COLUMNS)


def c_max_bound(n: int) -> float:
    """3 log n / log log n, the codegree cap from the analysis (nan for tiny n)."""
    if n < 16:
        return math.nan
    return 3.0 * math.log(n) / math.log(math.log(n))


def _clip(requested: int, available: int, what: str) -> int:
    if requested > available:
        logging.warning(f"requested {requested} sampled {what} but only {available} exist; clipping")
        return available
    return requested


def sample_vertices(n: int, count: int, rng: np.random.Generator) -> List[int]:
    count = _clip(count, n, "vertices")
    return sorted(rng.choice(n, size=count, replace=False).tolist())


def sample_pairs(n: int, count: int, rng: np.random.Generator) -> List[tuple]:
    count = _clip(count, pair_count(n), "pairs")
    if count == 0:
        return []
    picked = np.sort(rng.choice(pair_count(n), size=count, replace=False))
    return [tuple(edge) for edge in edges_from_indices(picked, n).tolist()]


def sample_unmatched_edges(state: ProcessState, count: int, rng: np.random.Generator) -> List[tuple]:
    edges = state.unmatched_edges()
    count = _clip(count, len(edges), "unmatched edges")
    if count == 0:
        return []
    return [tuple(edges[i]) for i in sorted(rng.choice(len(edges), size=count, replace=False).tolist())]


def record_checkpoint(state: ProcessState, ysol: OdeSolution, config: SamplingConfig,
                      rng: np.random.Generator) -> Snapshot:
    """Sample vertices, pairs and unmatched edges and compare them with the closed forms at y(t)."""
    n = state.n
    sqrt_n = math.sqrt(n)
    t = state.step / n ** 1.5
    y = ysol(t)
    cf = closed_forms_at(min(y, 1.0))
    snap = Snapshot(step=state.step, t=t)
    identity_violations = 0

    vertices = sample_vertices(n, config.vertices, rng)
    d_u, d_g, d_m, r_dev = [], [], [], []
    for v in vertices:
        d_u.append(state.d_U(v) / sqrt_n - y)
        d_g.append(state.d_G(v) / sqrt_n - 2 * t)
        d_m.append(state.d_M(v) / sqrt_n - (2 * t - y))
        hist = r_histogram(state, v, config.c_cap)
        if sum(hist) != n - 1:
            identity_violations += 1
        if state.d_G(v) != len(state.unmatched_adj[v] | state.matched_adj[v]):
            identity_violations += 1
        r_dev.extend(hist[c] / n - cf.r(c) for c in range(config.c_cap + 1))
    snap.add_family("d_U", d_u)
    snap.add_family("d_G", d_g)
    snap.add_family("d_M", d_m)
    snap.add_family("R", r_dev)

    pairs = sample_pairs(n, config.pairs, rng)
    q_dev, s_dev, auv_dev = [], [], []
    max_codeg = 0
    slack_violations = 0
    for u, v in pairs:
        q_hist = q_histogram(state, u, v)
        if sum(q_hist.values()) != n - 2:
            identity_violations += 1
        q_dev.extend(q_hist.get((b, c), 0) / n - cf.q(b, c)
                     for b in range(config.q_cap + 1) for c in range(config.q_cap + 1))
        s_hist = s_histogram(state, u, v)
        if sum(s_hist.values()) != state.d_U(v) - state.in_unmatched(u, v):
            identity_violations += 1
        s_dev.extend(s_hist.get(c, 0) / sqrt_n - cf.s(c) for c in range(config.c_cap + 1))
        g_u = state.unmatched_adj[u] | state.matched_adj[u]
        g_v = state.unmatched_adj[v] | state.matched_adj[v]
        max_codeg = max(max_codeg, len(g_u & g_v))
        if not state.in_unmatched(u, v):
            exact = a_count(state, u, v)
            gap = a_approx(state, u, v) - exact
            if not 0 <= gap <= a_slack_bound(state, u, v):
                slack_violations += 1
            auv_dev.append(exact / sqrt_n - cf.alpha)
    snap.add_family("Q", q_dev)
    snap.add_family("S", s_dev)
    snap.add_family("Auv", auv_dev)

    k_dev = [float(k_count(state, u, v, config.k_terms)) / sqrt_n - cf.kappa
             for u, v in sample_unmatched_edges(state, config.edges, rng)]
    snap.add_family("K", k_dev)

    snap.extras.update({
        "y": y,
        "unmatched_edges": float(state.unmatched_edge_count()),
        "matched_triangles": float(len(state.matched_triangles)),
        "max_codegree": float(max_codeg),
        "c_max_bound": c_max_bound(n),
        "degree_window": n ** -0.25 * math.log(n) ** 2 if n > 1 else math.nan,
        "identity_violations": float(identity_violations),
        "a_slack_violations": float(slack_violations),
    })
    return snap


def calibrated_bands(band: float, n: int, t_end: float) -> Dict[str, float]:
    """Per-family bands for concentration_report.

    R, Q and S use band, d_U uses UNMATCHED_BAND_FACTOR * band, both scaled by
    max(1, (CALIBRATION_N / n)^{1/4}). d_G follows the binomial spread of a
    degree at t_end and is never tighter than band.
    """
    if band <= 0:
        raise ArgumentError(f"band must be positive (got {band})")
    if n < 1:
        raise ArgumentError(f"n must be >= 1 (got {n})")
    scale = max(1.0, (CALIBRATION_N / n) ** 0.25)
    bands = {family: band * scale for family in VERDICT_FAMILIES}
    bands["d_U"] = UNMATCHED_BAND_FACTOR * band * scale
    bands["d_G"] = max(band, DEGREE_BAND_FACTOR * math.sqrt(2.0 * max(t_end, 0.0)) * n ** -0.25)
    return bands


@dataclass
class ConcentrationReport:
    band: Union[float, Dict[str, float]]
    verdicts: Dict[str, bool]
    mean_deviation: Dict[str, float]
    max_deviation: Dict[str, float]

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def to_dict(self) -> Dict:
        return {
            "band": self.band,
            "passed": self.passed,
            "verdicts": self.verdicts,
            "worst_mean_deviation": self.mean_deviation,
            "max_deviation": self.max_deviation,
        }


def concentration_report(traj: Trajectory, band: Union[float, Mapping[str, float]],
                         families: Iterable[str] = VERDICT_FAMILIES) -> ConcentrationReport:
    """Pass iff every snapshot's mean scaled deviation is within band, per family.

    band is one value for all families or a mapping family -> band (see calibrated_bands).
    """
    if isinstance(band, Mapping):
        band = dict(band)
        bad = {family: value for family, value in band.items() if value <= 0}
        if bad:
            raise ArgumentError(f"bands must be positive (got {bad})")
    elif band <= 0:
        raise ArgumentError(f"band must be positive (got {band})")
    if not traj.snapshots:
        raise EmptyTrajectoryError(f"trajectory of trial {traj.trial} has no snapshots")
    families = list(families)
    seen = sorted({f for snap in traj.snapshots for f in snap.stats})
    verdicts, worst_mean, worst_max = {}, {}, {}
    for family in seen:
        means = [snap.stats[family]["mean"] for snap in traj.snapshots if family in snap.stats]
        maxes = [snap.stats[family]["max"] for snap in traj.snapshots if family in snap.stats]
        worst_mean[family] = max(means)
        worst_max[family] = max(maxes)
        if family in families:
            limit = band.get(family) if isinstance(band, dict) else band
            if limit is None:
                raise ArgumentError(f"no band given for family {family}")
            verdicts[family] = worst_mean[family] <= limit
    return ConcentrationReport(band=band, verdicts=verdicts, mean_deviation=worst_mean, max_deviation=worst_max)


def final_mean_deviation(traj: Trajectory) -> Dict[str, float]:
    if not traj.snapshots:
        raise EmptyTrajectoryError(f"trajectory of trial {traj.trial} has no snapshots")
    return {family: stats["mean"] for family, stats in traj.snapshots[-1].stats.items()}


def scaling_report(runs: Mapping[int, List[Trajectory]],
                   families: Optional[Iterable[str]] = None) -> pd.DataFrame:
    """Final-snapshot mean deviation per (n, family), averaged over trials, with the log-log slope in n."""
    rows = []
    for n, trajectories in sorted(runs.items()):
        per_family: Dict[str, List[float]] = {}
        for traj in trajectories:
            for family, value in final_mean_deviation(traj).items():
                per_family.setdefault(family, []).append(value)
        for family, values in per_family.items():
            rows.append({"n": n, "family": family, "mean_deviation": float(np.mean(values))})
    frame = pd.DataFrame(rows, columns=["n", "family", "mean_deviation"])
    if families is not None:
        frame = frame[frame["family"].isin(list(families))]
    slopes = {}
    for family, group in frame.groupby("family"):
        usable = group[group["mean_deviation"] > 0]
        if usable["n"].nunique() >= 2:
            slopes[family] = float(np.polyfit(np.log(usable["n"]), np.log(usable["mean_deviation"]), 1)[0])
        else:
            slopes[family] = math.nan
    frame = frame.assign(slope=frame["family"].map(slopes))
    return frame.reset_index(drop=True)


def decreasing_in_n(report: pd.DataFrame, family: str) -> bool:
    """True iff the family's mean deviation is strictly smaller at the largest n than at the smallest."""
    group = report[report["family"] == family].sort_values("n")
    if len(group) < 2:
        return False
    return bool(group["mean_deviation"].iloc[-1] < group["mean_deviation"].iloc[0])
