"""Exact checks of the Griffiths-Kelly-Sherman correlation inequalities."""
from typing import Iterable, NamedTuple, Tuple

import numpy as np
from scipy.special import logsumexp

from src.ising_lab.core.models import Graph, IsingParams
from src.ising_lab.errors import InvalidInputError
from src.ising_lab.oracle.enumeration import DEFAULT_ENUMERATION_CAP, popcount, state_table


class GKSResult(NamedTuple):
    correlation: float  # <sigma_A>
    covariance: float  # <sigma_A sigma_B> - <sigma_A><sigma_B>
    edge_monotonicity: float  # <sigma_A>_G - <sigma_A>_{G-e}

    def holds(self, tolerance: float = 1e-12) -> bool:
        return min(self) >= -tolerance


def _vertex_mask(graph: Graph, vertices: Iterable[int]) -> int:
    mask = 0
    for v in vertices:
        graph.check_vertex(v)
        mask |= 1 << v
    return mask


def _set_products(indices: np.ndarray, mask: int) -> np.ndarray:
    """sigma_S for every configuration: (-1)^(number of minus spins in S)."""
    size = bin(mask).count("1")
    minus = size - popcount(indices & mask)
    return 1.0 - 2.0 * (minus & 1)


def _expect(log_weights: np.ndarray, values: np.ndarray) -> float:
    probs = np.exp(log_weights - logsumexp(log_weights))
    return float(np.dot(probs, values) / probs.sum())


def gks_check(
    graph: Graph,
    params: IsingParams,
    A: Iterable[int],
    B: Iterable[int],
    e: Tuple[int, int],
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> GKSResult:
    if params.lam < 1.0:
        raise InvalidInputError("GKS inequalities need a nonnegative field (lambda >= 1)")
    u, v = min(e), max(e)
    if (u, v) not in graph.edges:
        raise InvalidInputError(f"({u}, {v}) is not an edge of the graph")
    mask_a = _vertex_mask(graph, A)
    mask_b = _vertex_mask(graph, B)

    table = state_table(graph, cap)
    indices = table.indices
    log_weights = table.log_weights(params)

    sigma_a = _set_products(indices, mask_a)
    sigma_b = _set_products(indices, mask_b)
    # sigma_A * sigma_B = sigma of the symmetric difference
    sigma_ab = _set_products(indices, mask_a ^ mask_b)

    mean_a = _expect(log_weights, sigma_a)
    covariance = _expect(log_weights, sigma_ab) - mean_a * _expect(log_weights, sigma_b)

    edge_term = 1.0 - 2.0 * (((indices >> u) ^ (indices >> v)) & 1)
    mean_a_without = _expect(log_weights - 0.5 * params.beta * edge_term, sigma_a)
    return GKSResult(mean_a, covariance, mean_a - mean_a_without)
