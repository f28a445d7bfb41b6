"""Small graph families used by experiments and tests."""
from typing import Optional

import networkx as nx
import numpy as np

from src.ising_lab.core.models import Graph
from src.ising_lab.errors import InvalidInputError


def _from_nx(g: nx.Graph, delta_cap: Optional[int]) -> Graph:
    return Graph.from_networkx(g, delta_cap=delta_cap)


def empty_graph(n: int, delta_cap: int = 1) -> Graph:
    return Graph(n=n, delta_cap=delta_cap, edges=())


def path_graph(n: int, delta_cap: Optional[int] = None) -> Graph:
    return _from_nx(nx.path_graph(n), delta_cap)


def cycle_graph(n: int, delta_cap: Optional[int] = None) -> Graph:
    return _from_nx(nx.cycle_graph(n), delta_cap)


def complete_graph(n: int, delta_cap: Optional[int] = None) -> Graph:
    return _from_nx(nx.complete_graph(n), delta_cap)


def star_graph(leaves: int, delta_cap: Optional[int] = None) -> Graph:
    """Center 0 joined to vertices 1..leaves."""
    return _from_nx(nx.star_graph(leaves), delta_cap)


def disjoint_union(*graphs: Graph, delta_cap: Optional[int] = None) -> Graph:
    edges = []
    offset = 0
    for graph in graphs:
        edges.extend((u + offset, v + offset) for u, v in graph.edges)
        offset += graph.n
    cap = delta_cap if delta_cap is not None else max((g.delta_cap for g in graphs), default=1)
    return Graph(n=offset, delta_cap=cap, edges=edges)


def random_bounded_degree_graph(n: int, delta: int, rng: np.random.Generator, num_edges: Optional[int] = None) -> Graph:
    """
    Random graph with maximum degree at most ``delta``.

    Candidate pairs are visited in a random order and kept while both endpoints
    have spare degree, until ``num_edges`` edges are placed (drawn uniformly from
    0..floor(delta*n/2) when not given).
    """
    if n < 0 or delta < 1:
        raise InvalidInputError("need n >= 0 and delta >= 1")
    target = int(rng.integers(0, delta * n // 2 + 1)) if num_edges is None else num_edges
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    order = rng.permutation(len(pairs))
    degrees = np.zeros(n, dtype=np.int64)
    edges = []
    for index in order:
        if len(edges) >= target:
            break
        u, v = pairs[index]
        if degrees[u] < delta and degrees[v] < delta:
            edges.append((u, v))
            degrees[u] += 1
            degrees[v] += 1
    return Graph(n=n, delta_cap=delta, edges=edges)


def random_regular_graph(n: int, degree: int, seed: int) -> Graph:
    if (n * degree) % 2 != 0 or degree >= n:
        raise InvalidInputError(f"no {degree}-regular graph on {n} vertices")
    return _from_nx(nx.random_regular_graph(degree, n, seed=seed), degree)


GENERATORS = {
    "empty": lambda n, delta: empty_graph(n, delta_cap=delta or 1),
    "path": lambda n, delta: path_graph(n, delta_cap=delta),
    "cycle": lambda n, delta: cycle_graph(n, delta_cap=delta),
    "complete": lambda n, delta: complete_graph(n, delta_cap=delta),
    "star": lambda n, delta: star_graph(n - 1, delta_cap=delta),
}
