"""Mutable graph state shared by the random edge processes.

Revealed edges are split into the unmatched graph U (kept triangle-free)
and the matched graph M (an edge-disjoint union of triangles). The
functions below answer the codegree questions the packing analysis asks
about U: codegrees, the R/S/Q neighbourhood histograms, the A and K counts.
"""
from collections import Counter
from fractions import Fraction
from typing import Dict, Iterable, List, NamedTuple, Set, Tuple

import numpy as np

from exceptions import ArgumentError, DomainError

Triangle = Tuple[int, int, int]


class EdgeId(NamedTuple):
    """Undirected edge with u < v."""
    u: int
    v: int

    @classmethod
    def of(cls, a: int, b: int, n: int) -> "EdgeId":
        """Normalise an endpoint pair, checking 0 <= u < v < n."""
        a, b = int(a), int(b)
        if a == b:
            raise ArgumentError(f"loop {a}-{b} is not an edge")
        if not (0 <= a < n and 0 <= b < n):
            raise ArgumentError(f"edge {a}-{b} out of range for n={n}")
        return cls(a, b) if a < b else cls(b, a)


def pair_count(n: int) -> int:
    """C(n, 2)."""
    return n * (n - 1) // 2


def edge_index(u: int, v: int, n: int) -> int:
    """Lexicographic rank of the pair u < v among all C(n, 2) pairs."""
    return u * (2 * n - u - 1) // 2 + (v - u - 1)


def edges_from_indices(indices: Iterable[int], n: int) -> np.ndarray:
    """Inverse of edge_index, vectorised; returns an (m, 2) int64 array."""
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    b = 2 * n - 1
    u = np.floor((b - np.sqrt(float(b) * b - 8.0 * idx)) / 2).astype(np.int64)
    u = np.clip(u, 0, max(n - 2, 0))
    # float rounding can leave u off by one in either direction
    u = np.where(u * (b - u) // 2 > idx, u - 1, u)
    u = np.where((u + 1) * (b - u - 1) // 2 <= idx, u + 1, u)
    v = idx - u * (b - u) // 2 + u + 1
    return np.stack([u, v], axis=1)


def edge_stream(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """m distinct uniformly random edges of K_n in uniformly random order.

    Partial Fisher-Yates over the implicit lexicographic edge indexing: the
    first m positions of a uniform shuffle of range(C(n, 2)), with displaced
    entries kept in a dict so memory stays O(m).
    """
    total = pair_count(n)
    if m < 0 or m > total:
        raise ArgumentError(f"cannot reveal m={m} edges of K_{n} ({total} pairs)")
    if m == 0:
        return np.empty((0, 2), dtype=np.int64)
    draws = rng.integers(np.arange(m, dtype=np.int64), total)
    displaced: Dict[int, int] = {}
    chosen = np.empty(m, dtype=np.int64)
    for i, j in enumerate(draws.tolist()):
        at_j = displaced.get(j, j)
        displaced[j] = displaced.get(i, i)
        chosen[i] = at_j
    return edges_from_indices(chosen, n)


class ProcessState:
    """Unmatched/matched partition of the revealed edges of one process run."""

    def __init__(self, n: int):
        if n < 1:
            raise ArgumentError(f"vertex count must be positive (got {n})")
        self.n = n
        self.step = 0
        self.unmatched_adj: List[Set[int]] = [set() for _ in range(n)]
        self.matched_adj: List[Set[int]] = [set() for _ in range(n)]
        self.matched_triangles: List[Triangle] = []
        self.revealed: Set[int] = set()

    def _key(self, u: int, v: int) -> int:
        return u * self.n + v if u < v else v * self.n + u

    def is_revealed(self, u: int, v: int) -> bool:
        return self._key(u, v) in self.revealed

    def reveal(self, e: EdgeId):
        """Record e as revealed; duplicates are an error."""
        key = self._key(e.u, e.v)
        if key in self.revealed:
            raise ArgumentError(f"edge {e.u}-{e.v} was already revealed")
        self.revealed.add(key)
        self.step += 1

    def in_unmatched(self, u: int, v: int) -> bool:
        return v in self.unmatched_adj[u]

    def add_unmatched(self, e: EdgeId):
        self.unmatched_adj[e.u].add(e.v)
        self.unmatched_adj[e.v].add(e.u)

    def match_triangle(self, u: int, v: int, w: int):
        """Move the triangle uvw into M; uw and vw leave U, uv is the new edge."""
        for a, b in ((u, w), (v, w)):
            self.unmatched_adj[a].discard(b)
            self.unmatched_adj[b].discard(a)
        for a, b in ((u, v), (u, w), (v, w)):
            self.matched_adj[a].add(b)
            self.matched_adj[b].add(a)
        self.matched_triangles.append(tuple(sorted((u, v, w))))

    def d_U(self, v: int) -> int:
        return len(self.unmatched_adj[v])

    def d_M(self, v: int) -> int:
        return len(self.matched_adj[v])

    def d_G(self, v: int) -> int:
        return self.d_U(v) + self.d_M(v)

    def unmatched_edge_count(self) -> int:
        return sum(len(nbrs) for nbrs in self.unmatched_adj) // 2

    def matched_edge_count(self) -> int:
        return sum(len(nbrs) for nbrs in self.matched_adj) // 2

    def unmatched_edges(self) -> List[EdgeId]:
        return [EdgeId(u, v) for u, nbrs in enumerate(self.unmatched_adj) for v in sorted(nbrs) if u < v]

    def revealed_edges(self) -> List[EdgeId]:
        return [EdgeId(*divmod(key, self.n)) for key in sorted(self.revealed)]

    def triangle_scan(self) -> int:
        """Number of triangles in U (zero whenever the process is correct)."""
        return count_triangles(self.unmatched_adj)

    def invariant_violations(self) -> List[str]:
        """Every structural invariant of the partition that currently fails."""
        problems = []
        if self.triangle_scan():
            problems.append("U contains a triangle")
        matched_edges = set()
        for tri in self.matched_triangles:
            a, b, c = tri
            for e in ((a, b), (a, c), (b, c)):
                if e in matched_edges:
                    problems.append(f"matched triangles share edge {e}")
                matched_edges.add(e)
        m_adj_edges = {(u, v) for u, nbrs in enumerate(self.matched_adj) for v in nbrs if u < v}
        if m_adj_edges != matched_edges:
            problems.append("matched adjacency differs from the union of matched triangles")
        u_edges = {(e.u, e.v) for e in self.unmatched_edges()}
        if u_edges & matched_edges:
            problems.append("an edge is both matched and unmatched")
        if len(u_edges) + 3 * len(self.matched_triangles) != self.step:
            problems.append("|E(U)| + |E(M)| differs from the step count")
        if {self._key(u, v) for u, v in u_edges | matched_edges} != self.revealed:
            problems.append("revealed edges are not exactly E(U) + E(M)")
        return problems


def count_triangles(adj: List[Set[int]]) -> int:
    """Triangles in a graph given as adjacency sets, each counted once."""
    total = 0
    for u, nbrs in enumerate(adj):
        for v in nbrs:
            if v > u:
                total += sum(1 for w in nbrs & adj[v] if w > v)
    return total


def _check_vertex(state: ProcessState, v: int):
    if not 0 <= v < state.n:
        raise ArgumentError(f"vertex {v} out of range for n={state.n}")


def _check_pair(state: ProcessState, u: int, v: int):
    _check_vertex(state, u)
    _check_vertex(state, v)
    if u == v:
        raise ArgumentError(f"pair ({u}, {v}) needs two distinct vertices")


def codeg_unmatched(state: ProcessState, u: int, v: int) -> Tuple[int, List[int]]:
    """Common U-neighbours of u and v, in increasing vertex order."""
    _check_pair(state, u, v)
    witnesses = sorted(state.unmatched_adj[u] & state.unmatched_adj[v])
    return len(witnesses), witnesses


def codegree_counter(state: ProcessState, v: int) -> Counter:
    """Maps every u != v with positive codeg_U(u, v) to that codegree."""
    adj = state.unmatched_adj
    counts: Counter = Counter()
    for w in adj[v]:
        counts.update(adj[w])
    counts.pop(v, None)
    return counts


def r_histogram(state: ProcessState, v: int, c_max: int) -> List[int]:
    """|R_c(v)| for c = 0..c_max followed by one overflow bucket (c > c_max)."""
    _check_vertex(state, v)
    if c_max < 0:
        raise ArgumentError(f"c_max must be nonnegative (got {c_max})")
    buckets = [0] * (c_max + 2)
    counts = codegree_counter(state, v)
    buckets[0] = state.n - 1 - len(counts)
    for c in counts.values():
        buckets[min(c, c_max + 1)] += 1
    return buckets


def s_histogram(state: ProcessState, u: int, v: int) -> Counter:
    """c -> |S_c(u, v)|: w in N_U(v), w != u, by their U-codegree with u not counting v."""
    _check_pair(state, u, v)
    adj = state.unmatched_adj
    v_in_nu = v in adj[u]
    hist: Counter = Counter()
    for w in adj[v]:
        if w == u:
            continue
        # v is a neighbour of w, so it is a common neighbour iff uv is in U
        hist[len(adj[w] & adj[u]) - v_in_nu] += 1
    return hist


def s_count(state: ProcessState, u: int, v: int, c: int) -> int:
    if c < 0:
        raise ArgumentError(f"c must be nonnegative (got {c})")
    return s_histogram(state, u, v).get(c, 0)


def q_histogram(state: ProcessState, u: int, v: int) -> Counter:
    """(b, c) -> |Q_{b,c}(u, v)| over w not in {u, v}; zero cells omitted except (0, 0)."""
    _check_pair(state, u, v)
    cu = codegree_counter(state, u)
    cv = codegree_counter(state, v)
    hist: Counter = Counter()
    support = (set(cu) | set(cv)) - {u, v}
    for w in support:
        hist[(cu.get(w, 0), cv.get(w, 0))] += 1
    hist[(0, 0)] = state.n - 2 - len(support)
    return hist


def q_count(state: ProcessState, u: int, v: int, b: int, c: int) -> int:
    if b < 0 or c < 0:
        raise ArgumentError(f"b and c must be nonnegative (got {b}, {c})")
    return q_histogram(state, u, v).get((b, c), 0)


def a_count(state: ProcessState, u: int, v: int) -> int:
    """Unrevealed edges that would raise codeg_U(u, v) by one and stay in U.

    The edge is xw with x in {u, v} and w a U-neighbour of the other
    endpoint; it stays unmatched iff it closes no triangle, i.e.
    codeg_U(x, w) = 0 before insertion.
    """
    _check_pair(state, u, v)
    adj = state.unmatched_adj
    total = 0
    for x, y in ((u, v), (v, u)):
        for w in adj[y]:
            if w == x or state.is_revealed(x, w):
                continue
            if not adj[x] & adj[w]:
                total += 1
    return total


def a_approx(state: ProcessState, u: int, v: int) -> int:
    """S_0(u, v) + S_0(v, u), the approximation of A(u, v) used in the analysis."""
    return s_histogram(state, u, v).get(0, 0) + s_histogram(state, v, u).get(0, 0)


def a_slack_bound(state: ProcessState, u: int, v: int) -> int:
    """Upper bound on a_approx - a_count for a pair that is not an unmatched edge."""
    _check_pair(state, u, v)
    adj, madj = state.unmatched_adj, state.matched_adj
    codeg = len(adj[u] & adj[v])
    return 2 * codeg + len(adj[v] & madj[u]) + len(adj[u] & madj[v])


def k_count(state: ProcessState, u: int, v: int, c_max: int, exact_a: bool = False) -> Fraction:
    """K(u, v) = A(u, v) + sum_{c=1}^{c_max} (S_c(u, v) + S_c(v, u)) / (c + 1).

    Only meaningful for an unmatched edge uv. The A term defaults to
    S_0(u, v) + S_0(v, u): the insertions that match uv with certainty.
    With exact_a the survival count a_count is used instead, which is
    always 0 on an unmatched edge.
    """
    _check_pair(state, u, v)
    if not state.in_unmatched(u, v):
        raise DomainError(f"K({u}, {v}) is only defined for an unmatched edge")
    if c_max < 0:
        raise ArgumentError(f"c_max must be nonnegative (got {c_max})")
    s_uv = s_histogram(state, u, v)
    s_vu = s_histogram(state, v, u)
    total = Fraction(a_count(state, u, v) if exact_a else s_uv.get(0, 0) + s_vu.get(0, 0))
    for c in range(1, c_max + 1):
        total += Fraction(s_uv.get(c, 0) + s_vu.get(c, 0), c + 1)
    return total
