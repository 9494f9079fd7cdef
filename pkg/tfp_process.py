"""Triangle-free process on a G(n, m) edge stream.

Each revealed edge is accepted iff it closes no triangle with the edges
accepted so far. The rejected edges cover every triangle of the revealed
graph, giving an upper bound on its triangle covering number.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Set, Tuple

from exceptions import ArgumentError, GuardExceededError
from graph_core import EdgeId, count_triangles, edge_stream, pair_count
from ode_engine import OdeSolution, System, solution_covering
from packing_process import normalize_checkpoints
from run_config import split_seed
from tracker import Snapshot, Trajectory


class TfpState:
    """Accepted (triangle-free) graph and rejected edges of one run."""

    def __init__(self, n: int):
        if n < 1:
            raise ArgumentError(f"vertex count must be positive (got {n})")
        self.n = n
        self.step = 0
        self.accepted_adj: List[Set[int]] = [set() for _ in range(n)]
        self.accepted_count = 0
        self.rejected: List[EdgeId] = []
        self.revealed: Set[int] = set()

    def _key(self, u: int, v: int) -> int:
        return u * self.n + v if u < v else v * self.n + u

    def is_revealed(self, u: int, v: int) -> bool:
        return self._key(u, v) in self.revealed

    def accepted_edges(self) -> List[EdgeId]:
        return [EdgeId(u, v) for u, nbrs in enumerate(self.accepted_adj) for v in sorted(nbrs) if u < v]

    def revealed_edges(self) -> List[EdgeId]:
        return [EdgeId(*divmod(key, self.n)) for key in sorted(self.revealed)]


@dataclass
class TriangleCover:
    """Edges meeting every triangle of a graph on n vertices."""
    n: int
    edges: List[EdgeId] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.edges)


def tfp_step(state: TfpState, e: EdgeId) -> bool:
    """Reveal e; accept it iff its endpoints have no common accepted neighbour."""
    if not (0 <= e.u < e.v < state.n):
        raise ArgumentError(f"edge {e.u}-{e.v} out of range for n={state.n}")
    key = state._key(e.u, e.v)
    if key in state.revealed:
        raise ArgumentError(f"edge {e.u}-{e.v} was already revealed")
    state.revealed.add(key)
    state.step += 1
    adj = state.accepted_adj
    if adj[e.u].isdisjoint(adj[e.v]):
        adj[e.u].add(e.v)
        adj[e.v].add(e.u)
        state.accepted_count += 1
        return True
    state.rejected.append(e)
    return False


def count_open_pairs(state: TfpState, limit: Optional[int] = None) -> int:
    """Unrevealed pairs whose endpoints have codegree 0 in the accepted graph."""
    n = state.n
    if limit is not None and n > limit:
        raise GuardExceededError(f"open-pair count refused for n={n} > {limit}", estimate=pair_count(n))
    closed: Set[int] = set()
    for nbrs in state.accepted_adj:
        ordered = sorted(nbrs)
        for i, a in enumerate(ordered):
            base = a * n
            closed.update(base + b for b in ordered[i + 1:])
    closed_unrevealed = len(closed - state.revealed)
    return pair_count(n) - len(state.revealed) - closed_unrevealed


def expected_open_pairs(n: int, t_hat: float) -> float:
    """C(n, 2) exp(-4 t_hat^2)."""
    return pair_count(n) * math.exp(-4.0 * t_hat * t_hat)


def fa_band(n: int, t: float, beta: float, c: float) -> float:
    """n^{-beta} exp((2 + 13 c^2) t); reported, never used as a pass/fail band."""
    return n ** -beta * math.exp((2.0 + 13.0 * c * c) * t)


def record_tfp_checkpoint(state: TfpState, asol: OdeSolution, open_pairs_limit: int = 0) -> Snapshot:
    """Accepted-edge and cover deviations at the current step; open pairs when n is small enough."""
    n15 = state.n ** 1.5
    t = state.step / n15
    a_t = asol(t)
    accepted_scaled = state.accepted_count / n15
    snap = Snapshot(step=state.step, t=t)
    snap.add_family("accepted", [accepted_scaled - a_t])
    snap.add_family("cover", [len(state.rejected) / n15 - (t - a_t)])
    snap.extras.update({"a": a_t, "accepted_scaled": accepted_scaled,
                        "triangles_accepted": float(count_triangles(state.accepted_adj))})
    if state.n <= open_pairs_limit:
        t_hat = accepted_scaled
        observed = count_open_pairs(state)
        snap.add_family("open_pairs", [observed / expected_open_pairs(state.n, t_hat) - 1.0])
        snap.extras.update({"open_pairs": float(observed), "t_hat": t_hat})
    return snap


def run_tfp(n: int, m: int, seed: int, checkpoints: Sequence[int], trial: int = 0,
            asol: Optional[OdeSolution] = None,
            open_pairs_limit: int = 0) -> Tuple[TfpState, TriangleCover, Trajectory]:
    """Run the triangle-free process for m steps, recording A(i)/n^{3/2} at the checkpoints."""
    if m < 0 or m > pair_count(n):
        raise ArgumentError(f"cannot reveal m={m} edges on n={n} vertices ({pair_count(n)} pairs)")
    steps = normalize_checkpoints(checkpoints, m)
    if asol is None and steps:
        asol = solution_covering(System.A, m / n ** 1.5)
    process_rng, _ = split_seed(seed, trial)
    state = TfpState(n)
    trajectory = Trajectory(n=n, m=m, seed=seed, process="tfp", trial=trial)
    pending = list(reversed(steps))
    if pending and pending[-1] == 0:
        trajectory.add(record_tfp_checkpoint(state, asol, open_pairs_limit))
        pending.pop()
    for u, v in edge_stream(n, m, process_rng).tolist():
        tfp_step(state, EdgeId(u, v))
        if pending and pending[-1] == state.step:
            trajectory.add(record_tfp_checkpoint(state, asol, open_pairs_limit))
            pending.pop()
    logging.info(f"triangle-free run n={n} m={m} seed={seed} trial={trial}: "
                 f"{state.accepted_count} accepted, {len(state.rejected)} rejected")
    return state, TriangleCover(n=n, edges=list(state.rejected)), trajectory


def cover_is_valid(cover: TriangleCover, revealed: Iterable[Tuple[int, int]]) -> bool:
    """True iff the revealed graph minus the cover is triangle-free."""
    removed = {(min(u, v), max(u, v)) for u, v in cover.edges}
    adj: List[Set[int]] = [set() for _ in range(cover.n)]
    for u, v in revealed:
        a, b = min(u, v), max(u, v)
        if (a, b) not in removed:
            adj[a].add(b)
            adj[b].add(a)
    return count_triangles(adj) == 0
