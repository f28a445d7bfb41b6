"""Single-update kernels for the Ising chains, operating in place on an int8 spin array."""
import logging
import math
from enum import Enum
from typing import List

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.special import expit

from src.ising_lab.core.models import Graph, IsingParams, SpinConfig
from src.ising_lab.errors import InvalidInputError

logger = logging.getLogger(__name__)


class ChainKind(str, Enum):
    GLAUBER = "glauber"
    SW_GHOST = "sw_ghost"
    KAWASAKI_LOCAL = "kawasaki_local"
    KAWASAKI_GLOBAL = "kawasaki_global"
    EXACT = "exact"

    @property
    def conserves_magnetization(self) -> bool:
        return self in (ChainKind.KAWASAKI_LOCAL, ChainKind.KAWASAKI_GLOBAL)


class KawasakiVariant(str, Enum):
    LOCAL = "local"
    GLOBAL = "global"


def heat_bath_plus_probability(field: int, beta: float, log_lam: float) -> float:
    """p(+ | Y) = lambda e^{beta Y/2} / (lambda e^{beta Y/2} + lambda^{-1} e^{-beta Y/2})."""
    return float(expit(2.0 * log_lam + beta * field))


def kawasaki_delta_change(spins: np.ndarray, neighbors: List[np.ndarray], u: int, v: int, adjacent: bool) -> int:
    """delta(sigma') - delta(sigma) when the opposite spins at u and v are exchanged."""
    su, sv = int(spins[u]), int(spins[v])
    link = 1 if adjacent else 0
    field_u = int(spins[neighbors[u]].sum()) - sv * link
    field_v = int(spins[neighbors[v]].sum()) - su * link
    return -2 * su * field_u - 2 * sv * field_v


class ChainState:
    """Mutable spin array plus the graph structure the kernels need."""

    def __init__(self, graph: Graph, spins: np.ndarray):
        if len(spins) != graph.n:
            raise InvalidInputError(f"initial config has {len(spins)} spins but the graph has {graph.n} vertices")
        self.graph = graph
        self.n = graph.n
        self.spins = np.array(spins, dtype=np.int8)
        self.neighbors = [np.asarray(nbrs, dtype=np.int64) for nbrs in graph.adjacency]
        self.neighbor_sets = [frozenset(nbrs) for nbrs in graph.adjacency]
        self.us, self.vs = graph.edge_endpoints()

    @property
    def magnetization(self) -> int:
        return int(self.spins.sum(dtype=np.int64))

    @property
    def interaction_sum(self) -> int:
        if not len(self.us):
            return 0
        return int((self.spins[self.us].astype(np.int64) * self.spins[self.vs]).sum())

    def to_config(self) -> SpinConfig:
        return SpinConfig.from_array(self.spins)

    def glauber_update(self, beta: float, log_lam: float, rng: np.random.Generator) -> None:
        if self.n == 0:
            return
        v = int(rng.integers(self.n))
        field = int(self.spins[self.neighbors[v]].sum())
        self.spins[v] = 1 if rng.random() < heat_bath_plus_probability(field, beta, log_lam) else -1

    def sw_ghost_update(self, beta: float, log_lam: float, rng: np.random.Generator) -> None:
        """
        One Edwards-Sokal cluster update with a ghost vertex (index n) fixed to +.

        Aligned edges bond with probability 1 - e^{-beta}; + spins bond to the ghost
        with probability 1 - lambda^{-2}. Clusters holding the ghost become +, the
        others take a fresh uniform sign.
        """
        if log_lam < 0.0:
            raise InvalidInputError("Swendsen-Wang with a ghost vertex needs lambda >= 1")
        n = self.n
        if n == 0:
            return
        edge_open = (self.spins[self.us] == self.spins[self.vs]) & (rng.random(len(self.us)) < -math.expm1(-beta))
        ghost_open = (self.spins == 1) & (rng.random(n) < -math.expm1(-2.0 * log_lam))
        ghost_sources = np.flatnonzero(ghost_open)
        rows = np.concatenate([self.us[edge_open], ghost_sources])
        cols = np.concatenate([self.vs[edge_open], np.full(len(ghost_sources), n, dtype=np.int64)])
        bonds = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n + 1, n + 1))
        num_clusters, labels = connected_components(bonds, directed=False)
        cluster_spins = rng.choice(np.array([-1, 1], dtype=np.int8), size=num_clusters)
        cluster_spins[labels[n]] = 1
        self.spins[:] = cluster_spins[labels[:n]]

    def kawasaki_update(self, beta: float, variant: KawasakiVariant, rng: np.random.Generator) -> None:
        """
        Metropolis spin exchange. Same-spin proposals are counted null moves.
        """
        if variant == KawasakiVariant.LOCAL:
            if not len(self.us):
                return
            e = int(rng.integers(len(self.us)))
            u, v = int(self.us[e]), int(self.vs[e])
            adjacent = True
        else:
            if self.n < 2:
                return
            u = int(rng.integers(self.n))
            v = int(rng.integers(self.n - 1))
            if v >= u:
                v += 1
            adjacent = v in self.neighbor_sets[u]
        if self.spins[u] == self.spins[v]:
            return
        change = kawasaki_delta_change(self.spins, self.neighbors, u, v, adjacent)
        if change >= 0 or rng.random() < math.exp(0.5 * beta * change):
            self.spins[u], self.spins[v] = self.spins[v], self.spins[u]

    def sweep(self, kind: ChainKind, beta: float, log_lam: float, rng: np.random.Generator) -> None:
        """n single-site updates, or one cluster update for Swendsen-Wang."""
        if kind == ChainKind.GLAUBER:
            for _ in range(self.n):
                self.glauber_update(beta, log_lam, rng)
        elif kind == ChainKind.SW_GHOST:
            self.sw_ghost_update(beta, log_lam, rng)
        elif kind == ChainKind.KAWASAKI_LOCAL:
            for _ in range(self.n):
                self.kawasaki_update(beta, KawasakiVariant.LOCAL, rng)
        elif kind == ChainKind.KAWASAKI_GLOBAL:
            for _ in range(self.n):
                self.kawasaki_update(beta, KawasakiVariant.GLOBAL, rng)
        else:
            raise InvalidInputError(f"{kind.value} has no sweep")

    def single_update(self, kind: ChainKind, beta: float, log_lam: float, rng: np.random.Generator) -> None:
        if kind == ChainKind.GLAUBER:
            self.glauber_update(beta, log_lam, rng)
        elif kind == ChainKind.SW_GHOST:
            self.sw_ghost_update(beta, log_lam, rng)
        elif kind == ChainKind.KAWASAKI_LOCAL:
            self.kawasaki_update(beta, KawasakiVariant.LOCAL, rng)
        elif kind == ChainKind.KAWASAKI_GLOBAL:
            self.kawasaki_update(beta, KawasakiVariant.GLOBAL, rng)
        else:
            raise InvalidInputError(f"{kind.value} has no single update")


def glauber_step(graph: Graph, config: SpinConfig, params: IsingParams, rng: np.random.Generator) -> SpinConfig:
    state = ChainState(graph, config.as_array())
    state.glauber_update(params.beta, params.log_lambda, rng)
    return state.to_config()


def sw_ghost_step(graph: Graph, config: SpinConfig, params: IsingParams, rng: np.random.Generator) -> SpinConfig:
    if params.lam < 1.0:
        raise InvalidInputError("Swendsen-Wang with a ghost vertex needs lambda >= 1")
    state = ChainState(graph, config.as_array())
    state.sw_ghost_update(params.beta, params.log_lambda, rng)
    return state.to_config()


def kawasaki_step(
    graph: Graph,
    config: SpinConfig,
    beta: float,
    variant: KawasakiVariant,
    rng: np.random.Generator,
) -> SpinConfig:
    state = ChainState(graph, config.as_array())
    state.kawasaki_update(beta, KawasakiVariant(variant), rng)
    return state.to_config()
