"""Online triangle packing process.

Edges of G(n, m) are revealed one at a time. An edge that closes no
triangle with the unmatched graph U joins U; otherwise one of the
triangles it closes is picked uniformly at random and its three edges move
to the matched graph M. U stays triangle-free and M is a triangle packing.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from exceptions import ArgumentError
from graph_core import EdgeId, ProcessState, Triangle, codeg_unmatched, edge_stream
from ode_engine import OdeSolution, System, solution_covering
from run_config import split_seed
from tracker import SamplingConfig, Trajectory, record_checkpoint


class StepKind(str, Enum):
    STAYED_UNMATCHED = "StayedUnmatched"
    TRIANGLE_MATCHED = "TriangleMatched"


@dataclass(frozen=True)
class StepOutcome:
    kind: StepKind
    candidates: int
    triangle: Optional[Triangle] = None


@dataclass
class TrianglePacking:
    """Edge-disjoint triangles found in a graph on n vertices."""
    n: int
    triangles: List[Triangle] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.triangles)


def packing_step(state: ProcessState, e: EdgeId, rng: np.random.Generator) -> StepOutcome:
    """Reveal e and update the U/M partition."""
    count, witnesses = codeg_unmatched(state, e.u, e.v)
    state.reveal(e)
    if count == 0:
        state.add_unmatched(e)
        return StepOutcome(kind=StepKind.STAYED_UNMATCHED, candidates=0)
    w = witnesses[int(rng.integers(count))] if count > 1 else witnesses[0]
    state.match_triangle(e.u, e.v, w)
    return StepOutcome(kind=StepKind.TRIANGLE_MATCHED, candidates=count,
                       triangle=state.matched_triangles[-1])


def normalize_checkpoints(checkpoints: Iterable[int], m: int) -> List[int]:
    steps = sorted(set(int(c) for c in checkpoints))
    if steps and (steps[0] < 0 or steps[-1] > m):
        raise ArgumentError(f"checkpoints must lie in [0, {m}] (got {steps[0]}..{steps[-1]})")
    return steps


def even_checkpoints(m: int, count: int) -> List[int]:
    """count evenly spaced steps ending at m (step 0 included)."""
    if count < 1:
        raise ArgumentError(f"checkpoint count must be positive (got {count})")
    return sorted(set(np.linspace(0, m, count + 1).round().astype(int).tolist()))


def run_packing(n: int, m: int, seed: int, checkpoints: Sequence[int], trial: int = 0,
                ysol: Optional[OdeSolution] = None,
                sampling: Optional[SamplingConfig] = None) -> Tuple[ProcessState, TrianglePacking, Trajectory]:
    """Run the packing process for m steps, recording snapshots at the checkpoint steps."""
    total = n * (n - 1) // 2
    if m < 0 or m > total:
        raise ArgumentError(f"cannot reveal m={m} edges on n={n} vertices ({total} pairs)")
    steps = normalize_checkpoints(checkpoints, m)
    if ysol is None and steps:
        ysol = solution_covering(System.Y, m / n ** 1.5)
    sampling = sampling or SamplingConfig()
    process_rng, sampling_rng = split_seed(seed, trial)
    stream = edge_stream(n, m, process_rng)

    state = ProcessState(n)
    trajectory = Trajectory(n=n, m=m, seed=seed, process="packing", trial=trial)
    pending = list(reversed(steps))
    if pending and pending[-1] == 0:
        trajectory.add(record_checkpoint(state, ysol, sampling, sampling_rng))
        pending.pop()
    for u, v in stream.tolist():
        packing_step(state, EdgeId(u, v), process_rng)
        if pending and pending[-1] == state.step:
            trajectory.add(record_checkpoint(state, ysol, sampling, sampling_rng))
            pending.pop()
    logging.info(f"packing run n={n} m={m} seed={seed} trial={trial}: "
                 f"{len(state.matched_triangles)} triangles, {state.unmatched_edge_count()} unmatched edges")
    return state, TrianglePacking(n=n, triangles=list(state.matched_triangles)), trajectory


def packing_is_valid(packing: TrianglePacking, revealed: Iterable[Tuple[int, int]]) -> bool:
    """True iff the triangles are pairwise edge-disjoint and use only revealed edges."""
    present = {(min(u, v), max(u, v)) for u, v in revealed}
    used = set()
    for tri in packing.triangles:
        a, b, c = sorted(tri)
        if len({a, b, c}) != 3:
            return False
        for e in ((a, b), (a, c), (b, c)):
            if e in used or e not in present:
                return False
            used.add(e)
    return True
