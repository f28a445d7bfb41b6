"""Elementary statistics of a spin configuration on a graph."""
import math

from src.ising_lab.core.models import Graph, IsingParams, SpinConfig
from src.ising_lab.errors import InvalidInputError


def _check_size(graph: Graph, config: SpinConfig) -> None:
    if config.n != graph.n:
        raise InvalidInputError(f"config has {config.n} spins but the graph has {graph.n} vertices")


def magnetization(config: SpinConfig) -> int:
    return config.magnetization


def plus_count(config: SpinConfig) -> int:
    return config.plus_count


def interaction_sum(graph: Graph, config: SpinConfig) -> int:
    """delta(sigma): sum of sigma_u * sigma_v over edges."""
    _check_size(graph, config)
    spins = config.spins
    return sum(spins[u] * spins[v] for u, v in graph.edges)


def log_gibbs_weight(graph: Graph, config: SpinConfig, params: IsingParams) -> float:
    return 0.5 * params.beta * interaction_sum(graph, config) + magnetization(config) * params.log_lambda


def gibbs_weight(graph: Graph, config: SpinConfig, params: IsingParams) -> float:
    """
    exp((beta/2) delta(sigma)) * lambda^M(sigma).

    Raises OverflowError once the weight leaves double range; use
    ``log_gibbs_weight`` for large beta * |E|.
    """
    return math.exp(log_gibbs_weight(graph, config, params))


def neighbor_field(graph: Graph, config: SpinConfig, v: int) -> int:
    """Magnetization of the neighbourhood of v."""
    _check_size(graph, config)
    return sum(config.spins[w] for w in graph.neighbors(v))
