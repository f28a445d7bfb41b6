"""
Exact transition matrices of the chains on small graphs, for reversibility and
stationarity checks.

States are encoded configurations in increasing index order, restricted to the
magnetization-k slice for the Kawasaki kinds, so rows line up with the exact law
from the oracle.
"""
import logging
import math
from dataclasses import dataclass
from typing import Union

import networkx as nx
import numpy as np

from src.ising_lab.chains.kernels import ChainKind, heat_bath_plus_probability
from src.ising_lab.core.models import FixedMagParams, Graph, IsingParams
from src.ising_lab.errors import CapacityError, InvalidInputError
from src.ising_lab.oracle.distributions import law_of

logger = logging.getLogger(__name__)

TRANSITION_N_LIMIT = 8
SW_BOND_LIMIT = 20

Params = Union[IsingParams, FixedMagParams]


@dataclass(frozen=True)
class ChainMatrix:
    kind: ChainKind
    states: np.ndarray
    matrix: np.ndarray
    stationary: np.ndarray

    def reversibility_error(self) -> float:
        flow = self.stationary[:, None] * self.matrix
        return float(np.max(np.abs(flow - flow.T)))

    def stationarity_error(self) -> float:
        return float(np.max(np.abs(self.stationary @ self.matrix - self.stationary)))

    def row_sum_error(self) -> float:
        return float(np.max(np.abs(self.matrix.sum(axis=1) - 1.0)))

    def is_irreducible(self) -> bool:
        support = nx.DiGraph()
        support.add_nodes_from(range(len(self.states)))
        rows, cols = np.nonzero(self.matrix > 0)
        support.add_edges_from(zip(rows.tolist(), cols.tolist()))
        return nx.is_strongly_connected(support)


def _spin(index: int, v: int) -> int:
    return 1 if (index >> v) & 1 else -1


def _glauber_matrix(graph: Graph, params: IsingParams, states: np.ndarray, position: dict) -> np.ndarray:
    n = graph.n
    matrix = np.zeros((len(states), len(states)))
    for row, s in enumerate(states.tolist()):
        for v in range(n):
            field = sum(_spin(s, w) for w in graph.adjacency[v])
            p_plus = heat_bath_plus_probability(field, params.beta, params.log_lambda)
            p_flip = (1.0 - p_plus) if _spin(s, v) == 1 else p_plus
            matrix[row, position[s ^ (1 << v)]] += p_flip / n
            matrix[row, row] += (1.0 - p_flip) / n
    return matrix


def _kawasaki_matrix(graph: Graph, params: FixedMagParams, states: np.ndarray, position: dict, local: bool) -> np.ndarray:
    n = graph.n
    if local:
        proposals = list(graph.edges)
    else:
        proposals = [(u, v) for u in range(n) for v in range(n) if u != v]
    matrix = np.zeros((len(states), len(states)))
    if not proposals:
        return np.eye(len(states))
    weight = 1.0 / len(proposals)
    for row, s in enumerate(states.tolist()):
        for u, v in proposals:
            su, sv = _spin(s, u), _spin(s, v)
            if su == sv:
                matrix[row, row] += weight
                continue
            link = 1 if graph.has_edge(u, v) else 0
            field_u = sum(_spin(s, w) for w in graph.adjacency[u]) - sv * link
            field_v = sum(_spin(s, w) for w in graph.adjacency[v]) - su * link
            change = -2 * su * field_u - 2 * sv * field_v
            accept = min(1.0, math.exp(0.5 * params.beta * change))
            matrix[row, position[s ^ (1 << u) ^ (1 << v)]] += weight * accept
            matrix[row, row] += weight * (1.0 - accept)
    return matrix


def _cluster_free_counts(bond_ends: np.ndarray, n: int) -> np.ndarray:
    """
    For every subset (bit mask) of the candidate bonds, the number of clusters
    on vertices 0..n-1 plus ghost n that do not contain the ghost.
    """
    count = len(bond_ends)
    masks = np.arange(1 << count, dtype=np.int64)
    labels = np.tile(np.arange(n + 1, dtype=np.int64), (masks.size, 1))
    changed = True
    while changed:
        changed = False
        for b, (u, v) in enumerate(bond_ends):
            open_b = ((masks >> b) & 1).astype(bool)
            low = np.minimum(labels[:, u], labels[:, v])
            update = open_b & ((labels[:, u] != low) | (labels[:, v] != low))
            if update.any():
                changed = True
                labels[update, u] = low[update]
                labels[update, v] = low[update]
        if changed:
            # pointer jumping
            labels = np.take_along_axis(labels, labels, axis=1)
    roots = (labels == np.arange(n + 1)[None, :]).sum(axis=1)
    return roots - 1


def _subset_sums(values: np.ndarray, bits: int) -> np.ndarray:
    """f(T) = sum over subsets S of T of values[S] (zeta transform over bit masks)."""
    f = values.copy()
    masks = np.arange(f.size, dtype=np.int64)
    for b in range(bits):
        has_bit = ((masks >> b) & 1).astype(bool)
        f[has_bit] += f[masks[has_bit] ^ (1 << b)]
    return f


def _sw_matrix(graph: Graph, params: IsingParams, states: np.ndarray) -> np.ndarray:
    """
    P(s, s') = sum over bond sets w drawn from s of P(w | s) * 2^{-free clusters(w)},
    restricted to w whose bonds are all satisfied by s' (equal endpoints, ghost
    bonds on + spins).
    """
    n = graph.n
    p_edge = -math.expm1(-params.beta)
    p_ghost = -math.expm1(-2.0 * params.log_lambda)
    matrix = np.zeros((len(states), len(states)))
    all_states = states.tolist()
    for row, s in enumerate(all_states):
        bond_ends = []
        probs = []
        for u, v in graph.edges:
            if _spin(s, u) == _spin(s, v) and p_edge > 0:
                bond_ends.append((u, v))
                probs.append(p_edge)
        for v in range(n):
            if _spin(s, v) == 1 and p_ghost > 0:
                bond_ends.append((v, n))
                probs.append(p_ghost)
        if len(bond_ends) > SW_BOND_LIMIT:
            raise CapacityError(f"{len(bond_ends)} candidate bonds exceed the exact Swendsen-Wang limit")
        count = len(bond_ends)
        masks = np.arange(1 << count, dtype=np.int64)
        log_p = np.zeros(masks.size)
        for b, p in enumerate(probs):
            open_b = ((masks >> b) & 1).astype(bool)
            log_p += np.where(open_b, math.log(p), math.log1p(-p) if p < 1.0 else -np.inf)
        free = _cluster_free_counts(np.asarray(bond_ends, dtype=np.int64).reshape(-1, 2), n)
        totals = _subset_sums(np.exp(log_p) * np.power(0.5, free), count)
        for col, target in enumerate(all_states):
            satisfied = 0
            for b, (u, v) in enumerate(bond_ends):
                if v == n:
                    ok = _spin(target, u) == 1
                else:
                    ok = _spin(target, u) == _spin(target, v)
                if ok:
                    satisfied |= 1 << b
            matrix[row, col] = totals[satisfied]
    return matrix


def transition_matrix(graph: Graph, kind: ChainKind, params: Params) -> ChainMatrix:
    if graph.n > TRANSITION_N_LIMIT:
        raise CapacityError(f"exact transition matrices support n <= {TRANSITION_N_LIMIT}")
    kind = ChainKind(kind)
    law = law_of(graph, params)
    states = law.indices
    position = {int(s): i for i, s in enumerate(states.tolist())}
    if kind == ChainKind.GLAUBER:
        if not isinstance(params, IsingParams):
            raise InvalidInputError("glauber needs (beta, lambda)")
        matrix = _glauber_matrix(graph, params, states, position)
    elif kind == ChainKind.SW_GHOST:
        if not isinstance(params, IsingParams) or params.lam < 1.0:
            raise InvalidInputError("sw_ghost needs (beta, lambda) with lambda >= 1")
        matrix = _sw_matrix(graph, params, states)
    elif kind.conserves_magnetization:
        if not isinstance(params, FixedMagParams):
            raise InvalidInputError(f"{kind.value} needs (beta, k)")
        matrix = _kawasaki_matrix(graph, params, states, position, local=kind == ChainKind.KAWASAKI_LOCAL)
    else:
        # independent exact draws
        matrix = np.tile(law.probs, (len(states), 1))
    return ChainMatrix(kind=kind, states=states, matrix=matrix, stationary=law.probs)

