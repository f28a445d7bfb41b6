"""Exact probability tables over configurations and exact sampling from them."""
import logging
from dataclasses import dataclass
from typing import List, Optional, Union

import numpy as np
from scipy.special import logsumexp

from src.ising_lab.core.models import FixedMagParams, Graph, IsingParams, SpinConfig
from src.ising_lab.oracle.enumeration import DEFAULT_ENUMERATION_CAP, indices_to_spins, state_table
from src.ising_lab.utils.rng import RandomSource, as_rng

logger = logging.getLogger(__name__)

Params = Union[IsingParams, FixedMagParams]


@dataclass(frozen=True)
class ExactDistribution:
    """Probabilities over encoded configurations (bit v set iff spin v is +1)."""
    n: int
    indices: np.ndarray
    probs: np.ndarray

    def probability(self, config: SpinConfig) -> float:
        position = np.searchsorted(self.indices, config.to_index())
        if position < len(self.indices) and self.indices[position] == config.to_index():
            return float(self.probs[position])
        return 0.0

    def sample_indices(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.choice(self.indices, size=size, p=self.probs)

    def sample_spins(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return indices_to_spins(self.sample_indices(rng, size), self.n)

    def tv_to_samples(self, sample_indices: np.ndarray) -> float:
        """Total variation between this law and the empirical law of the samples; 1.0 for no samples."""
        sample_indices = np.asarray(sample_indices, dtype=np.int64)
        if sample_indices.size == 0:
            return 1.0
        support, counts = np.unique(sample_indices, return_counts=True)
        empirical = dict(zip(support.tolist(), (counts / sample_indices.size).tolist()))
        total = 0.0
        for index, p in zip(self.indices.tolist(), self.probs.tolist()):
            total += abs(p - empirical.pop(index, 0.0))
        # samples outside the support of the exact law
        total += sum(empirical.values())
        return 0.5 * total


def _normalize(indices: np.ndarray, log_weights: np.ndarray, n: int) -> ExactDistribution:
    probs = np.exp(log_weights - logsumexp(log_weights))
    probs /= probs.sum()
    return ExactDistribution(n=n, indices=indices, probs=probs)


def exact_distribution(graph: Graph, params: IsingParams, cap: int = DEFAULT_ENUMERATION_CAP) -> ExactDistribution:
    """mu_{G, beta, lambda} over all 2^n configurations."""
    table = state_table(graph, cap)
    return _normalize(table.indices, table.log_weights(params), graph.n)


def exact_fixed_distribution(graph: Graph, fixed: FixedMagParams, cap: int = DEFAULT_ENUMERATION_CAP) -> ExactDistribution:
    """nu_{G, beta, k}: proportional to exp((beta/2) delta) on configurations with magnetization k."""
    plus = fixed.plus_count(graph.n)
    table = state_table(graph, cap)
    mask = table.plus_counts == plus
    return _normalize(table.indices[mask], 0.5 * fixed.beta * table.deltas[mask], graph.n)


def law_of(graph: Graph, params: Params, cap: int = DEFAULT_ENUMERATION_CAP) -> ExactDistribution:
    if isinstance(params, FixedMagParams):
        return exact_fixed_distribution(graph, params, cap)
    return exact_distribution(graph, params, cap)


def exact_sample(
    graph: Graph,
    params: Params,
    seed: RandomSource,
    size: Optional[int] = None,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> Union[SpinConfig, List[SpinConfig]]:
    """One exact draw (``size=None``) or a list of ``size`` independent draws."""
    rng = as_rng(seed)
    law = law_of(graph, params, cap)
    spins = law.sample_spins(rng, 1 if size is None else size)
    configs = [SpinConfig.from_array(row) for row in spins]
    return configs[0] if size is None else configs
