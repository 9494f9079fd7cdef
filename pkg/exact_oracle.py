"""Exact triangle packing and covering numbers on small graphs.

Both searches run over the triangle list with edges encoded as bits of an
int. Packing uses an LP (fractional packing) bound for pruning; covering
branches on the edges of an unhit triangle, bounded below by a greedy
packing of the unhit triangles.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Sequence, Tuple, Union

import networkx as nx
import numpy as np
from scipy.optimize import linprog

from exceptions import ArgumentError, GuardExceededError, TriangleProcessError
from graph_core import EdgeId, Triangle, edge_stream
from packing_process import TrianglePacking, packing_is_valid
from tfp_process import TriangleCover, cover_is_valid

MAX_VERTICES = 64
TRIANGLE_LIMIT = 100000
ATLAS_MAX_N = 7


@dataclass
class SmallGraph:
    """Graph on n <= 64 vertices with edge bits and its complete triangle list."""
    n: int
    edges: List[Tuple[int, int]]
    edge_bit: Dict[Tuple[int, int], int] = field(init=False)
    adjacency: List[set] = field(init=False)
    triangles: List[Triangle] = field(init=False)
    name: str = ""

    def __post_init__(self):
        if not 0 <= self.n <= MAX_VERTICES:
            raise ArgumentError(f"small graphs have at most {MAX_VERTICES} vertices (got {self.n})")
        normalized = sorted({(min(u, v), max(u, v)) for u, v in self.edges})
        for u, v in normalized:
            if u == v or not 0 <= u < v < self.n:
                raise ArgumentError(f"edge {u}-{v} invalid for n={self.n}")
        self.edges = normalized
        self.edge_bit = {e: i for i, e in enumerate(normalized)}
        self.adjacency = [set() for _ in range(self.n)]
        for u, v in normalized:
            self.adjacency[u].add(v)
            self.adjacency[v].add(u)
        self.triangles = [(u, v, w) for u, v in normalized
                          for w in sorted(self.adjacency[u] & self.adjacency[v]) if w > v]

    @property
    def m(self) -> int:
        return len(self.edges)

    def triangle_mask(self, tri: Triangle) -> int:
        a, b, c = tri
        bit = self.edge_bit
        return (1 << bit[(a, b)]) | (1 << bit[(a, c)]) | (1 << bit[(b, c)])

    def edges_of_mask(self, mask: int) -> List[EdgeId]:
        return [EdgeId(*e) for e, i in self.edge_bit.items() if mask >> i & 1]

    @classmethod
    def from_networkx(cls, graph: nx.Graph, name: str = "") -> "SmallGraph":
        relabeled = nx.convert_node_labels_to_integers(graph, ordering="sorted")
        return cls(n=relabeled.number_of_nodes(), edges=list(relabeled.edges()), name=name)

    @classmethod
    def from_graph6(cls, text: str) -> "SmallGraph":
        text = text.strip()
        return cls.from_networkx(nx.from_graph6_bytes(text.encode("ascii")), name=text)

    def to_graph6(self) -> str:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from(self.edges)
        return nx.to_graph6_bytes(graph, header=False).decode("ascii").strip()


def parse_edge_list(text: str, name: str = "") -> SmallGraph:
    """One 'u v' pair per line; blank lines and '#' comments ignored; n = largest label + 1."""
    lines = [line for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]
    try:
        graph = nx.parse_edgelist(lines, nodetype=int, data=False)
    except (TypeError, ValueError) as e:
        raise ArgumentError(f"could not parse edge list: {e}")
    n = max(graph.nodes, default=-1) + 1
    return SmallGraph(n=n, edges=list(graph.edges()), name=name)


def read_graph6_lines(lines: Iterable[str]) -> Iterator[SmallGraph]:
    for line in lines:
        line = line.strip()
        if line:
            yield SmallGraph.from_graph6(line)


def _guard(g: SmallGraph, limit: int):
    if len(g.triangles) > limit:
        raise GuardExceededError(f"{len(g.triangles)} triangles exceed the oracle limit {limit}",
                                 estimate=len(g.triangles))


def _degree_order(g: SmallGraph) -> List[Triangle]:
    deg = [len(nbrs) for nbrs in g.adjacency]
    return sorted(g.triangles, key=lambda t: (-(deg[t[0]] + deg[t[1]] + deg[t[2]]), t))


def fractional_packing_value(masks: Sequence[int], edge_count: int) -> float:
    """LP optimum of max sum x_T, sum_{T containing e} x_T <= 1, 0 <= x <= 1."""
    if not masks:
        return 0.0
    rows = np.zeros((edge_count, len(masks)))
    for j, mask in enumerate(masks):
        for i in range(edge_count):
            if mask >> i & 1:
                rows[i, j] = 1.0
    used = rows.any(axis=1)
    result = linprog(-np.ones(len(masks)), A_ub=rows[used], b_ub=np.ones(int(used.sum())),
                     bounds=(0, 1), method="highs")
    if not result.success:
        raise TriangleProcessError(f"fractional packing LP failed: {result.message}")
    return float(-result.fun)


def fractional_packing(g: SmallGraph) -> float:
    """Fractional triangle packing number (equal to the fractional covering number)."""
    return fractional_packing_value([g.triangle_mask(t) for t in g.triangles], g.m)


def greedy_packing_masks(masks: Iterable[int], blocked: int = 0) -> List[int]:
    chosen = []
    for mask in masks:
        if not mask & blocked:
            chosen.append(mask)
            blocked |= mask
    return chosen


def exact_nu(g: SmallGraph, limit: int = TRIANGLE_LIMIT) -> Tuple[int, TrianglePacking]:
    """Maximum edge-disjoint triangle packing by branch and bound."""
    _guard(g, limit)
    order = _degree_order(g)
    masks = [g.triangle_mask(t) for t in order]
    greedy = set(greedy_packing_masks(masks))
    best = [i for i, mask in enumerate(masks) if mask in greedy]
    best_size = [len(best)]

    def upper_bound(start: int, used: int, current: int) -> int:
        compatible = [mask for mask in masks[start:] if not mask & used]
        union = 0
        for mask in compatible:
            union |= mask
        cheap = min(len(compatible), bin(union).count("1") // 3)
        if current + cheap <= best_size[0]:
            return cheap
        return min(cheap, int(fractional_packing_value(compatible, g.m) + 1e-9))

    def search(start: int, used: int, chosen: List[int]):
        while start < len(masks) and masks[start] & used:
            start += 1
        if start == len(masks):
            if len(chosen) > best_size[0]:
                best_size[0] = len(chosen)
                best[:] = chosen
            return
        if len(chosen) + upper_bound(start, used, len(chosen)) <= best_size[0]:
            return
        chosen.append(start)
        search(start + 1, used | masks[start], chosen)
        chosen.pop()
        search(start + 1, used, chosen)

    search(0, 0, [])
    packing = TrianglePacking(n=g.n, triangles=[order[i] for i in best])
    if not packing_is_valid(packing, g.edges):
        raise TriangleProcessError("exact packing witness failed validation")
    return len(packing), packing


def exact_tau(g: SmallGraph, limit: int = TRIANGLE_LIMIT) -> Tuple[int, TriangleCover]:
    """Minimum set of edges meeting every triangle by branch and bound."""
    _guard(g, limit)
    order = _degree_order(g)
    masks = [g.triangle_mask(t) for t in order]
    start_cover = max_cut_cover(g)
    best_mask = [sum(1 << g.edge_bit[(e.u, e.v)] for e in start_cover.edges)]
    best_size = [len(start_cover)]

    def search(chosen: int, forbidden: int, size: int):
        unhit = [mask for mask in masks if not mask & chosen]
        if not unhit:
            if size < best_size[0]:
                best_size[0], best_mask[0] = size, chosen
            return
        if size + len(greedy_packing_masks(unhit)) >= best_size[0]:
            return
        free = [(bin(mask & ~forbidden).count("1"), mask) for mask in unhit]
        width, target = min(free, key=lambda item: item[0])
        if width == 0:
            return
        options = target & ~forbidden
        tried = 0
        while options:
            bit = options & -options
            options ^= bit
            search(chosen | bit, forbidden | tried, size + 1)
            tried |= bit

    search(0, 0, 0)
    cover = TriangleCover(n=g.n, edges=g.edges_of_mask(best_mask[0]))
    if not cover_is_valid(cover, g.edges):
        raise TriangleProcessError("exact cover witness failed validation")
    return len(cover), cover


def max_cut_cover(graph: Union[SmallGraph, nx.Graph]) -> TriangleCover:
    """Edges inside the sides of a locally optimal cut; at most half of all edges.

    Starts with every vertex on one side and flips, in vertex order, any vertex
    with more neighbours on its own side, until no flip helps.
    """
    if isinstance(graph, SmallGraph):
        n, edges, adjacency = graph.n, graph.edges, graph.adjacency
    else:
        relabeled = nx.convert_node_labels_to_integers(graph, ordering="sorted")
        n = relabeled.number_of_nodes()
        edges = sorted((min(u, v), max(u, v)) for u, v in relabeled.edges())
        adjacency = [set(relabeled.adj[v]) for v in range(n)]
    side = [0] * n
    improved = True
    while improved:
        improved = False
        for v in range(n):
            same = sum(1 for w in adjacency[v] if side[w] == side[v])
            if 2 * same > len(adjacency[v]):
                side[v] ^= 1
                improved = True
    cover = TriangleCover(n=n, edges=[EdgeId(u, v) for u, v in edges if side[u] == side[v]])
    if 2 * len(cover) > len(edges):
        raise TriangleProcessError("local max-cut left more than half of the edges uncut")
    return cover


@dataclass(frozen=True)
class TuzaResult:
    nu: int
    tau: int
    holds: bool
    fractional: float
    max_cut_cover: int

    @property
    def ratio(self) -> float:
        return self.tau / self.nu if self.nu else float("nan")


def verify_tuza(g: SmallGraph, limit: int = TRIANGLE_LIMIT) -> TuzaResult:
    nu, _ = exact_nu(g, limit)
    tau, _ = exact_tau(g, limit)
    result = TuzaResult(nu=nu, tau=tau, holds=tau <= 2 * nu,
                        fractional=fractional_packing(g), max_cut_cover=len(max_cut_cover(g)))
    if not result.holds:
        logging.error(f"Tuza counterexample candidate {g.to_graph6()}: nu={nu}, tau={tau}")
    return result


def all_small_graphs(max_n: int = ATLAS_MAX_N) -> Iterator[SmallGraph]:
    """Every graph on at most max_n vertices up to isomorphism (graph atlas, max_n <= 7)."""
    if not 0 <= max_n <= ATLAS_MAX_N:
        raise ArgumentError(f"the exhaustive family is available for max_n <= {ATLAS_MAX_N} (got {max_n})")
    for graph in nx.graph_atlas_g():
        if graph.number_of_nodes() <= max_n:
            yield SmallGraph.from_networkx(graph, name=graph.name or "")


def random_small_graphs(n: int, m: int, count: int, rng: np.random.Generator) -> Iterator[SmallGraph]:
    """count independent uniform G(n, m) samples."""
    for index in range(count):
        edges = [tuple(e) for e in edge_stream(n, m, rng).tolist()]
        yield SmallGraph(n=n, edges=edges, name=f"G({n},{m})#{index}")
