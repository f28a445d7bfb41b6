"""
Brute-force enumeration of all 2^n spin configurations.

Configurations are encoded as integers: bit v set means spin v is +1. For every
index we record X (number of +1 spins) and the cut (number of edges whose
endpoints disagree), from which delta = |E| - 2*cut. The joint histogram of
(X, cut) is the density of states; every grand-canonical and canonical quantity
at any (beta, lambda) is a weighted sum over it.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from src.ising_lab.core.models import Graph, IsingParams
from src.ising_lab.errors import CapacityError

logger = logging.getLogger(__name__)

DEFAULT_ENUMERATION_CAP = 24
DEFAULT_CHUNK_BITS = 20

_POPCOUNT8 = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)


def ensure_enumerable(graph: Graph, cap: int = DEFAULT_ENUMERATION_CAP) -> None:
    if graph.n > cap:
        raise CapacityError(f"graph has n={graph.n} vertices, above the enumeration cap of {cap}")


def popcount(values: np.ndarray, bits: int = 64) -> np.ndarray:
    values = np.asarray(values, dtype=np.uint64)
    total = np.zeros(values.shape, dtype=np.int64)
    for shift in range(0, bits, 8):
        total += _POPCOUNT8[((values >> np.uint64(shift)) & np.uint64(0xFF)).astype(np.int64)]
    return total


def state_indices(n: int) -> np.ndarray:
    return np.arange(1 << n, dtype=np.int64)


def indices_to_spins(indices: np.ndarray, n: int) -> np.ndarray:
    """(len(indices), n) int8 array of +1/-1 spins."""
    indices = np.asarray(indices, dtype=np.int64)
    bits = (indices[:, None] >> np.arange(n, dtype=np.int64)[None, :]) & 1
    return (2 * bits - 1).astype(np.int8)


def spins_to_indices(spins: np.ndarray) -> np.ndarray:
    spins = np.atleast_2d(np.asarray(spins))
    weights = np.left_shift(np.int64(1), np.arange(spins.shape[1], dtype=np.int64))
    return ((spins > 0).astype(np.int64) * weights[None, :]).sum(axis=1)


def cut_counts(graph: Graph, indices: np.ndarray) -> np.ndarray:
    """Number of disagreeing edges for each encoded configuration."""
    cuts = np.zeros(indices.shape, dtype=np.int64)
    for u, v in graph.edges:
        cuts += ((indices >> u) ^ (indices >> v)) & 1
    return cuts


@dataclass(frozen=True)
class StateTable:
    """Per-configuration statistics for every index 0..2^n - 1."""
    n: int
    num_edges: int
    plus_counts: np.ndarray
    cuts: np.ndarray

    @property
    def indices(self) -> np.ndarray:
        return state_indices(self.n)

    @property
    def deltas(self) -> np.ndarray:
        return self.num_edges - 2 * self.cuts

    @property
    def magnetizations(self) -> np.ndarray:
        return 2 * self.plus_counts - self.n

    def log_weights(self, params: IsingParams) -> np.ndarray:
        return 0.5 * params.beta * self.deltas + self.magnetizations * params.log_lambda


@dataclass(frozen=True)
class DensityOfStates:
    """counts[x, c] = number of configurations with x plus spins and c cut edges."""
    n: int
    num_edges: int
    counts: np.ndarray

    def log_counts(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.counts.astype(np.float64))

    def log_fixed_vector(self, beta: float) -> np.ndarray:
        """log Z^fix(beta, 2l - n) for l = 0..n."""
        cut = np.arange(self.num_edges + 1)
        interaction = 0.5 * beta * (self.num_edges - 2 * cut)
        return logsumexp(self.log_counts() + interaction[None, :], axis=1)

    def log_plus_terms(self, params: IsingParams) -> np.ndarray:
        """log of the total weight with exactly l plus spins, l = 0..n."""
        ell = np.arange(self.n + 1)
        return self.log_fixed_vector(params.beta) + (2 * ell - self.n) * params.log_lambda

    def log_partition(self, params: IsingParams) -> float:
        return float(logsumexp(self.log_plus_terms(params)))

    def plus_pmf(self, params: IsingParams) -> np.ndarray:
        terms = self.log_plus_terms(params)
        pmf = np.exp(terms - logsumexp(terms))
        return pmf / pmf.sum()


def _build_state_table(graph: Graph, chunk_bits: int) -> StateTable:
    size = 1 << graph.n
    plus_counts = np.empty(size, dtype=np.int64)
    cuts = np.empty(size, dtype=np.int64)
    chunk = 1 << chunk_bits
    for start in range(0, size, chunk):
        stop = min(size, start + chunk)
        block = np.arange(start, stop, dtype=np.int64)
        plus_counts[start:stop] = popcount(block, bits=max(8, graph.n))
        cuts[start:stop] = cut_counts(graph, block)
    return StateTable(n=graph.n, num_edges=graph.num_edges, plus_counts=plus_counts, cuts=cuts)


@lru_cache(maxsize=8)
def _cached_state_table(graph: Graph, chunk_bits: int) -> StateTable:
    logger.debug("Enumerating 2^%d configurations (|E|=%d)", graph.n, graph.num_edges)
    return _build_state_table(graph, chunk_bits)


@lru_cache(maxsize=256)
def _cached_density(graph: Graph, chunk_bits: int) -> DensityOfStates:
    # accumulated chunk by chunk; never holds the 2^n state table
    size = 1 << graph.n
    width = graph.num_edges + 1
    flat = np.zeros((graph.n + 1) * width, dtype=np.int64)
    chunk = 1 << chunk_bits
    for start in range(0, size, chunk):
        block = np.arange(start, min(size, start + chunk), dtype=np.int64)
        keys = popcount(block, bits=max(8, graph.n)) * width + cut_counts(graph, block)
        flat += np.bincount(keys, minlength=flat.size)
    return DensityOfStates(n=graph.n, num_edges=graph.num_edges, counts=flat.reshape(graph.n + 1, width))


def state_table(graph: Graph, cap: int = DEFAULT_ENUMERATION_CAP, chunk_bits: int = DEFAULT_CHUNK_BITS) -> StateTable:
    ensure_enumerable(graph, cap)
    return _cached_state_table(graph, chunk_bits)


def density_of_states(graph: Graph, cap: int = DEFAULT_ENUMERATION_CAP, chunk_bits: int = DEFAULT_CHUNK_BITS) -> DensityOfStates:
    ensure_enumerable(graph, cap)
    return _cached_density(graph, chunk_bits)
