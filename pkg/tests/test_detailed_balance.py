import numpy as np
import pytest

from src.ising_lab.chains.kernels import ChainKind
from src.ising_lab.chains.transition import transition_matrix
from src.ising_lab.core.generators import path_graph, random_bounded_degree_graph
from src.ising_lab.core.models import FixedMagParams, IsingParams
from src.ising_lab.errors import CapacityError, InvalidInputError
from src.ising_lab.utils.rng import make_rng


def _assert_reversible(chain):
    assert chain.row_sum_error() <= 1e-12
    assert chain.reversibility_error() <= 1e-12
    assert chain.stationarity_error() <= 1e-10
    assert np.all(chain.matrix >= 0)


@pytest.mark.parametrize("kind", [ChainKind.GLAUBER, ChainKind.SW_GHOST])
@pytest.mark.parametrize("beta, lam", [(0.4, 1.0), (1.3, 1.7)])
def test_grand_canonical_reversibility(small_graphs, kind, beta, lam):
    for graph in small_graphs:
        chain = transition_matrix(graph, kind, IsingParams(beta=beta, lam=lam))
        _assert_reversible(chain)
        assert chain.is_irreducible()


@pytest.mark.parametrize("kind", [ChainKind.KAWASAKI_LOCAL, ChainKind.KAWASAKI_GLOBAL])
@pytest.mark.parametrize("beta", [0.4, 2.0])
def test_kawasaki_reversibility(small_graphs, kind, beta):
    for graph in small_graphs:
        k = graph.n % 2
        chain = transition_matrix(graph, kind, FixedMagParams(beta=beta, k=k))
        _assert_reversible(chain)
        # every state in the fiber keeps magnetization k
        plus = (graph.n + k) // 2
        assert all(bin(int(s)).count("1") == plus for s in chain.states)
        assert chain.is_irreducible()


def test_local_kawasaki_reducible_on_disconnected_graph(two_k2):
    chain = transition_matrix(two_k2, ChainKind.KAWASAKI_LOCAL, FixedMagParams(beta=1.0, k=0))
    _assert_reversible(chain)
    assert not chain.is_irreducible()
    assert transition_matrix(two_k2, ChainKind.KAWASAKI_GLOBAL, FixedMagParams(beta=1.0, k=0)).is_irreducible()


def test_transition_size_limit():
    with pytest.raises(CapacityError):
        transition_matrix(path_graph(9), ChainKind.GLAUBER, IsingParams(beta=1.0, lam=1.0))


def test_transition_parameter_pairing(triangle):
    with pytest.raises(InvalidInputError):
        transition_matrix(triangle, ChainKind.KAWASAKI_LOCAL, IsingParams(beta=1.0, lam=1.0))
    with pytest.raises(InvalidInputError):
        transition_matrix(triangle, ChainKind.SW_GHOST, IsingParams(beta=1.0, lam=0.8))


@pytest.fixture
def ten_random_graphs():
    rng = make_rng(606)
    graphs = []
    while len(graphs) < 10:
        graph = random_bounded_degree_graph(int(rng.integers(5, 9)), 3, rng)
        if graph.edges:
            graphs.append(graph)
    return graphs


@pytest.mark.slow
@pytest.mark.parametrize("kind, lam", [(ChainKind.GLAUBER, 1.5), (ChainKind.SW_GHOST, 1.0)])
def test_grand_canonical_reversibility_on_random_graphs(ten_random_graphs, kind, lam):
    for graph in ten_random_graphs:
        _assert_reversible(transition_matrix(graph, kind, IsingParams(beta=1.1, lam=lam)))


@pytest.mark.slow
@pytest.mark.parametrize("kind", [ChainKind.KAWASAKI_LOCAL, ChainKind.KAWASAKI_GLOBAL])
def test_kawasaki_reversibility_on_random_graphs(ten_random_graphs, kind):
    for graph in ten_random_graphs:
        k = 2 - graph.n % 2
        chain = transition_matrix(graph, kind, FixedMagParams(beta=1.1, k=k))
        _assert_reversible(chain)
        plus = (graph.n + k) // 2
        assert all(bin(int(s)).count("1") == plus for s in chain.states)
