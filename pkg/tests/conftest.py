from __future__ import annotations

from itertools import combinations
from types import SimpleNamespace

import numpy as np
import pytest

from graph_core import EdgeId, ProcessState


def brute_triangles(n, edges):
    present = {(min(u, v), max(u, v)) for u, v in edges}
    return [(a, b, c) for a, b, c in combinations(range(n), 3)
            if (a, b) in present and (a, c) in present and (b, c) in present]


def brute_nu(n, edges):
    triangles = brute_triangles(n, edges)
    best = 0
    for size in range(1, len(triangles) + 1):
        found = False
        for chosen in combinations(triangles, size):
            used = [e for a, b, c in chosen for e in ((a, b), (a, c), (b, c))]
            if len(used) == len(set(used)):
                found = True
                break
        if not found:
            break
        best = size
    return best


def brute_tau(n, edges):
    edges = sorted({(min(u, v), max(u, v)) for u, v in edges})
    triangles = brute_triangles(n, edges)
    for size in range(len(edges) + 1):
        for removed in combinations(edges, size):
            removed = set(removed)
            if all({(a, b), (a, c), (b, c)} & removed for a, b, c in triangles):
                return size
    return len(edges)


def brute_codeg(adj, u, v):
    return sum(1 for w in range(len(adj)) if w not in (u, v) and w in adj[u] and w in adj[v])


def complete_edges(n):
    return list(combinations(range(n), 2))


def build_state(n, unmatched=(), triangles=()):
    """ProcessState with the given U edges and matched triangles already revealed."""
    state = ProcessState(n)
    for u, v in unmatched:
        state.reveal(EdgeId.of(u, v, n))
        state.add_unmatched(EdgeId.of(u, v, n))
    for a, b, c in triangles:
        for x, y in ((a, b), (a, c), (b, c)):
            state.reveal(EdgeId.of(x, y, n))
        state.match_triangle(a, b, c)
    return state


@pytest.fixture
def brute():
    return SimpleNamespace(triangles=brute_triangles, nu=brute_nu, tau=brute_tau,
                           codeg=brute_codeg, complete_edges=complete_edges)


@pytest.fixture
def make_state():
    return build_state


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
