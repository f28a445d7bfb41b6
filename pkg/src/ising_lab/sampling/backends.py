"""
Pluggable samplers.

A mu-sampler draws from the grand-canonical measure mu_{G, beta, lambda} at a
requested activity; a nu-sampler draws from the fixed-magnetization measure
nu_{G, beta, k} at a requested inverse temperature. Both return (count, n) int8
arrays of spins and take all randomness from the generator they are handed.
"""
import logging
from functools import partial
from typing import Dict, Protocol

import numpy as np

from src.ising_lab.chains.kernels import ChainKind, KawasakiVariant
from src.ising_lab.chains.runner import run_sweeps
from src.ising_lab.core.models import FixedMagParams, Graph, IsingParams, SpinConfig
from src.ising_lab.errors import InvalidInputError
from src.ising_lab.oracle.distributions import ExactDistribution, exact_distribution, exact_fixed_distribution
from src.ising_lab.oracle.enumeration import DEFAULT_ENUMERATION_CAP, ensure_enumerable
from src.ising_lab.utils.parallel import parallel_map
from src.ising_lab.utils.rng import child_seed, make_rng

logger = logging.getLogger(__name__)


class MuSampler(Protocol):
    graph: Graph

    def draw(self, lam: float, count: int, rng: np.random.Generator) -> np.ndarray:
        ...


class NuSampler(Protocol):
    graph: Graph

    def draw(self, beta: float, k: int, count: int, rng: np.random.Generator) -> np.ndarray:
        ...


class ExactMuSampler:
    """Draws straight from the enumerated law."""

    def __init__(self, graph: Graph, beta: float, cap: int = DEFAULT_ENUMERATION_CAP):
        ensure_enumerable(graph, cap)
        self.graph = graph
        self.beta = beta
        self.cap = cap
        self._laws: Dict[float, ExactDistribution] = {}

    def law(self, lam: float) -> ExactDistribution:
        if lam not in self._laws:
            self._laws[lam] = exact_distribution(self.graph, IsingParams(beta=self.beta, lam=lam), self.cap)
        return self._laws[lam]

    def draw(self, lam: float, count: int, rng: np.random.Generator) -> np.ndarray:
        return self.law(lam).sample_spins(rng, count)


def _chain_draw(seed: int, graph: Graph, kind: ChainKind, params, sweeps: int, start: str, k: int = 0) -> np.ndarray:
    rng = make_rng(seed)
    if start == "random":
        initial = rng.choice(np.array([-1, 1], dtype=np.int8), size=graph.n)
    else:
        initial = SpinConfig.first_plus(graph.n, k).as_array()
    return run_sweeps(graph, kind, params, initial, sweeps, rng)


class ChainMuSampler:
    """Each draw is the end state of an independent chain started from a uniform random config."""

    def __init__(self, graph: Graph, beta: float, kind: ChainKind, sweeps: int, jobs: int = 1):
        kind = ChainKind(kind)
        if kind not in (ChainKind.GLAUBER, ChainKind.SW_GHOST):
            raise InvalidInputError(f"{kind.value} cannot sample the grand-canonical measure")
        self.graph = graph
        self.beta = beta
        self.kind = kind
        self.sweeps = sweeps
        self.jobs = jobs

    def draw(self, lam: float, count: int, rng: np.random.Generator) -> np.ndarray:
        if count <= 0:
            return np.zeros((0, self.graph.n), dtype=np.int8)
        seeds = [child_seed(rng) for _ in range(count)]
        worker = partial(
            _chain_draw, graph=self.graph, kind=self.kind, params=IsingParams(beta=self.beta, lam=lam),
            sweeps=self.sweeps, start="random",
        )
        return np.stack(parallel_map(worker, seeds, jobs=self.jobs))


class ExactNuSampler:
    def __init__(self, graph: Graph, cap: int = DEFAULT_ENUMERATION_CAP):
        ensure_enumerable(graph, cap)
        self.graph = graph
        self.cap = cap

    def draw(self, beta: float, k: int, count: int, rng: np.random.Generator) -> np.ndarray:
        return exact_fixed_distribution(self.graph, FixedMagParams(beta=beta, k=k), self.cap).sample_spins(rng, count)


class KawasakiNuSampler:
    """Independent Kawasaki runs from the first-(k+n)/2-plus configuration."""

    def __init__(self, graph: Graph, variant: KawasakiVariant, sweeps: int, jobs: int = 1):
        self.graph = graph
        self.kind = ChainKind.KAWASAKI_LOCAL if KawasakiVariant(variant) == KawasakiVariant.LOCAL else ChainKind.KAWASAKI_GLOBAL
        self.sweeps = sweeps
        self.jobs = jobs

    def draw(self, beta: float, k: int, count: int, rng: np.random.Generator) -> np.ndarray:
        if count <= 0:
            return np.zeros((0, self.graph.n), dtype=np.int8)
        seeds = [child_seed(rng) for _ in range(count)]
        worker = partial(
            _chain_draw, graph=self.graph, kind=self.kind, params=FixedMagParams(beta=beta, k=k),
            sweeps=self.sweeps, start="fallback", k=k,
        )
        return np.stack(parallel_map(worker, seeds, jobs=self.jobs))


def make_mu_sampler(
    graph: Graph,
    beta: float,
    kind: ChainKind,
    sweeps: int = 200,
    jobs: int = 1,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> MuSampler:
    kind = ChainKind(kind)
    if kind == ChainKind.EXACT:
        return ExactMuSampler(graph, beta, cap)
    return ChainMuSampler(graph, beta, kind, sweeps, jobs)
