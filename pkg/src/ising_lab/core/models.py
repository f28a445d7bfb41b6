from typing import Any, Iterable, Optional, Tuple

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, ValidationInfo, field_validator

from src.ising_lab.errors import InvalidInputError

Edge = Tuple[int, int]


class Graph(BaseModel):
    """
    Simple undirected graph on vertices 0..n-1 with a declared degree bound.

    Edges are stored canonically as sorted (u, v) pairs with u < v. Instances are
    immutable and validated on construction, so every consumer may rely on the
    degree bound without re-checking it.
    """
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=0)
    delta_cap: int = Field(ge=1)
    edges: Tuple[Edge, ...] = ()

    _adjacency: Tuple[Tuple[int, ...], ...] = PrivateAttr(default=())

    @field_validator("edges", mode="before")
    @classmethod
    def _canonical_edges(cls, value: Any) -> Tuple[Edge, ...]:
        pairs = []
        for edge in value:
            edge = tuple(edge)
            if len(edge) != 2:
                raise ValueError(f"edge {edge!r} must have exactly two endpoints")
            u, v = int(edge[0]), int(edge[1])
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            pairs.append((min(u, v), max(u, v)))
        pairs.sort()
        for first, second in zip(pairs, pairs[1:]):
            if first == second:
                raise ValueError(f"duplicate edge {first}")
        return tuple(pairs)

    @field_validator("edges")
    @classmethod
    def _check_bounds(cls, edges: Tuple[Edge, ...], info: ValidationInfo) -> Tuple[Edge, ...]:
        # runs before model_post_init builds the adjacency lists
        n, delta_cap = info.data.get("n"), info.data.get("delta_cap")
        if n is None or delta_cap is None:
            return edges
        degrees = [0] * n
        for u, v in edges:
            if v >= n or u < 0:
                raise ValueError(f"edge ({u}, {v}) references a vertex outside 0..{n - 1}")
            degrees[u] += 1
            degrees[v] += 1
        for vertex, degree in enumerate(degrees):
            if degree > delta_cap:
                raise ValueError(f"vertex {vertex} has degree {degree} > delta_cap {delta_cap}")
        return edges

    def model_post_init(self, __context: Any) -> None:
        neighbors = [[] for _ in range(self.n)]
        for u, v in self.edges:
            neighbors[u].append(v)
            neighbors[v].append(u)
        self._adjacency = tuple(tuple(sorted(nbrs)) for nbrs in neighbors)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def adjacency(self) -> Tuple[Tuple[int, ...], ...]:
        return self._adjacency

    def neighbors(self, v: int) -> Tuple[int, ...]:
        self.check_vertex(v)
        return self._adjacency[v]

    def degree(self, v: int) -> int:
        return len(self.neighbors(v))

    @property
    def degrees(self) -> Tuple[int, ...]:
        return tuple(len(nbrs) for nbrs in self._adjacency)

    @property
    def max_degree(self) -> int:
        return max(self.degrees, default=0)

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.neighbors(u)

    def check_vertex(self, v: int) -> None:
        if not 0 <= v < self.n:
            raise InvalidInputError(f"vertex {v} outside 0..{self.n - 1}")

    def edge_endpoints(self) -> Tuple[np.ndarray, np.ndarray]:
        """Endpoint arrays (us, vs) aligned with ``edges``."""
        if not self.edges:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty.copy()
        arr = np.asarray(self.edges, dtype=np.int64)
        return arr[:, 0].copy(), arr[:, 1].copy()

    def without_edge(self, edge: Edge) -> "Graph":
        u, v = min(edge), max(edge)
        if (u, v) not in self.edges:
            raise InvalidInputError(f"({u}, {v}) is not an edge")
        return Graph(n=self.n, delta_cap=self.delta_cap, edges=[e for e in self.edges if e != (u, v)])

    @classmethod
    def from_networkx(cls, g: nx.Graph, delta_cap: Optional[int] = None) -> "Graph":
        mapping = {node: index for index, node in enumerate(sorted(g.nodes()))}
        edges = [(mapping[u], mapping[v]) for u, v in g.edges()]
        cap = delta_cap if delta_cap is not None else max(1, max((d for _, d in g.degree()), default=0))
        return cls(n=len(mapping), delta_cap=cap, edges=edges)


class SpinConfig(BaseModel):
    """Assignment of +1/-1 to vertices 0..n-1."""
    model_config = ConfigDict(frozen=True)

    spins: Tuple[int, ...]

    @field_validator("spins", mode="before")
    @classmethod
    def _check_spins(cls, value: Any) -> Tuple[int, ...]:
        spins = tuple(int(s) for s in value)
        for s in spins:
            if s not in (1, -1):
                raise ValueError(f"spin value {s} is not +1 or -1")
        return spins

    @property
    def n(self) -> int:
        return len(self.spins)

    @property
    def plus_count(self) -> int:
        return sum(1 for s in self.spins if s == 1)

    @property
    def magnetization(self) -> int:
        return sum(self.spins)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.spins, dtype=np.int8)

    def flipped(self) -> "SpinConfig":
        return SpinConfig(spins=tuple(-s for s in self.spins))

    def to_index(self) -> int:
        """Bit v of the index is set iff spin v is +1."""
        index = 0
        for v, s in enumerate(self.spins):
            if s == 1:
                index |= 1 << v
        return index

    @classmethod
    def from_index(cls, index: int, n: int) -> "SpinConfig":
        return cls(spins=tuple(1 if (index >> v) & 1 else -1 for v in range(n)))

    @classmethod
    def from_array(cls, spins: Iterable[int]) -> "SpinConfig":
        return cls(spins=tuple(int(s) for s in spins))

    @classmethod
    def all_plus(cls, n: int) -> "SpinConfig":
        return cls(spins=(1,) * n)

    @classmethod
    def first_plus(cls, n: int, k: int) -> "SpinConfig":
        """The first (k + n) / 2 vertices +1, the rest -1; magnetization exactly k."""
        check_magnetization(n, k)
        plus = (n + k) // 2
        return cls(spins=(1,) * plus + (-1,) * (n - plus))


class IsingParams(BaseModel):
    """Grand-canonical parameters: inverse temperature and activity."""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    beta: float = Field(ge=0.0)
    lam: float = Field(gt=0.0, alias="lambda")

    @property
    def log_lambda(self) -> float:
        return float(np.log(self.lam))


class FixedMagParams(BaseModel):
    """Canonical parameters: inverse temperature and target magnetization k."""
    model_config = ConfigDict(frozen=True)

    beta: float = Field(ge=0.0)
    k: int

    @property
    def grand(self) -> IsingParams:
        return IsingParams(beta=self.beta, lam=1.0)

    def plus_count(self, n: int) -> int:
        check_magnetization(n, self.k)
        return (n + self.k) // 2


def check_magnetization(n: int, k: int) -> None:
    if abs(k) > n or (k - n) % 2 != 0:
        raise InvalidInputError(f"magnetization k={k} is not achievable on {n} vertices (need |k| <= n and k = n mod 2)")
