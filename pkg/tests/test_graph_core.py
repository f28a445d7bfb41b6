import math

import pytest
from pydantic import ValidationError

from src.ising_lab.core.generators import complete_graph, cycle_graph, disjoint_union, path_graph, random_regular_graph
from src.ising_lab.core.graph_io import graph_from_dict, load_graph, save_graph
from src.ising_lab.core.models import FixedMagParams, Graph, IsingParams, SpinConfig, check_magnetization
from src.ising_lab.core.spins import gibbs_weight, interaction_sum, log_gibbs_weight, neighbor_field
from src.ising_lab.errors import InvalidInputError


def test_edges_are_canonical():
    graph = Graph(n=3, delta_cap=2, edges=[(2, 1), (0, 1)])
    assert graph.edges == ((0, 1), (1, 2))
    assert graph.neighbors(1) == (0, 2)
    assert graph.max_degree == 2


@pytest.mark.parametrize("edges", [[(0, 0)], [(0, 1), (1, 0)], [(0, 3)]])
def test_malformed_edges_rejected(edges):
    with pytest.raises(ValueError):
        Graph(n=3, delta_cap=3, edges=edges)


def test_out_of_range_vertex_is_a_validation_error():
    with pytest.raises(ValidationError, match="outside 0..2"):
        Graph(n=3, delta_cap=3, edges=[(0, 3)])
    with pytest.raises(InvalidInputError, match="invalid graph"):
        graph_from_dict({"n": 3, "delta_cap": 3, "edges": [[0, 3]]})


def test_degree_cap_enforced():
    with pytest.raises(ValueError, match="delta_cap"):
        Graph(n=4, delta_cap=2, edges=[(0, 1), (0, 2), (0, 3)])


def test_graph_file_round_trip(tmp_path):
    graph = cycle_graph(5, delta_cap=3)
    path = tmp_path / "c5.json"
    save_graph(graph, path)
    assert load_graph(path) == graph


def test_graph_record_missing_keys():
    with pytest.raises(InvalidInputError, match="missing"):
        graph_from_dict({"n": 2, "edges": []})


def test_graph_file_errors(tmp_path):
    with pytest.raises(InvalidInputError, match="not found"):
        load_graph(tmp_path / "absent.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(InvalidInputError, match="valid JSON"):
        load_graph(bad)


def test_spin_config_encoding():
    config = SpinConfig(spins=(1, -1, 1, 1))
    assert config.magnetization == 2
    assert config.plus_count == 3
    assert config.to_index() == 0b1101
    assert SpinConfig.from_index(0b1101, 4) == config
    assert config.flipped().magnetization == -2


def test_spin_values_validated():
    with pytest.raises(ValueError):
        SpinConfig(spins=(1, 0, -1))


def test_first_plus_hits_magnetization():
    config = SpinConfig.first_plus(7, -1)
    assert config.magnetization == -1
    assert config.spins[:3] == (1, 1, 1)


@pytest.mark.parametrize("n, k", [(4, 1), (3, 5), (6, -8)])
def test_unreachable_magnetization(n, k):
    with pytest.raises(InvalidInputError):
        check_magnetization(n, k)
    with pytest.raises(InvalidInputError):
        FixedMagParams(beta=1.0, k=k).plus_count(n)


def test_weight_of_k2():
    graph = complete_graph(2)
    params = IsingParams(beta=1.0, lam=2.0)
    aligned = SpinConfig(spins=(1, 1))
    opposed = SpinConfig(spins=(1, -1))
    assert interaction_sum(graph, aligned) == 1
    assert interaction_sum(graph, opposed) == -1
    assert gibbs_weight(graph, aligned, params) == pytest.approx(math.exp(0.5) * 4.0)
    assert gibbs_weight(graph, opposed, params) == pytest.approx(math.exp(-0.5))
    assert log_gibbs_weight(graph, aligned, params) == pytest.approx(0.5 + 2 * math.log(2.0))


def test_lambda_alias():
    assert IsingParams(beta=0.0, **{"lambda": 3.0}).lam == 3.0


def test_config_size_must_match_graph():
    with pytest.raises(InvalidInputError):
        interaction_sum(path_graph(3), SpinConfig(spins=(1, 1)))


def test_neighbor_field():
    graph = path_graph(3)
    assert neighbor_field(graph, SpinConfig(spins=(1, -1, 1)), 1) == 2


def test_disjoint_union_offsets():
    union = disjoint_union(complete_graph(2), complete_graph(3))
    assert union.n == 5
    assert union.edges == ((0, 1), (2, 3), (2, 4), (3, 4))


def test_random_regular_graph():
    graph = random_regular_graph(8, 3, seed=1)
    assert set(graph.degrees) == {3}
    with pytest.raises(InvalidInputError):
        random_regular_graph(5, 3, seed=1)


def test_without_edge():
    graph = cycle_graph(4)
    assert graph.without_edge((1, 0)).num_edges == 3
    with pytest.raises(InvalidInputError):
        graph.without_edge((0, 2))
