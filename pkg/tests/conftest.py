import json
from pathlib import Path
from typing import Callable, List

import pytest

from src.ising_lab.core.generators import complete_graph, cycle_graph, disjoint_union, path_graph, random_bounded_degree_graph, star_graph
from src.ising_lab.core.graph_io import graph_to_dict
from src.ising_lab.core.models import Graph
from src.ising_lab.hardness.gadget import GadgetOverrides, GadgetSpec
from src.ising_lab.utils.rng import make_rng


@pytest.fixture
def k2() -> Graph:
    return complete_graph(2, delta_cap=3)


@pytest.fixture
def two_k2() -> Graph:
    return disjoint_union(complete_graph(2), complete_graph(2), delta_cap=3)


@pytest.fixture
def triangle() -> Graph:
    return complete_graph(3, delta_cap=3)


@pytest.fixture
def small_graphs() -> List[Graph]:
    """Connected Delta = 3 graphs small enough for exact transition matrices."""
    return [
        path_graph(4, delta_cap=3),
        cycle_graph(5, delta_cap=3),
        star_graph(3, delta_cap=3),
        complete_graph(4, delta_cap=3),
        Graph(n=6, delta_cap=3, edges=[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3)]),
    ]


@pytest.fixture
def random_graphs() -> List[Graph]:
    rng = make_rng(2024)
    return [random_bounded_degree_graph(int(rng.integers(4, 11)), 3, rng) for _ in range(10)]


@pytest.fixture
def toy_gadget_spec() -> GadgetSpec:
    """Six-vertex gadget: one core vertex and two W0 vertices per side, bare terminals."""
    return GadgetSpec(
        delta=3,
        n=1,
        overrides=GadgetOverrides(m=2, m_prime=2, tree_depth=0, match_size=1),
        max_matching_attempts=1000,
    )


@pytest.fixture
def write_graph(tmp_path: Path) -> Callable[[Graph, str], Path]:
    def _write(graph: Graph, name: str = "graph.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(graph_to_dict(graph)))
        return path

    return _write
