"""
The random bipartite gadget.

Core: n + m' vertices per side joined by Delta uniformly random perfect matchings,
with m' edges of the last matching removed. The 2m' endpoints of the removed edges
(W0) have degree Delta - 1; on each side they are split into m groups of
(Delta - 1)^tree_depth and each group becomes the leaf set of a (Delta - 1)-ary
tree. The tree roots are the terminals and are the only vertices left with degree
Delta - 1.
"""
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.ising_lab.core.graph_io import graph_from_dict, graph_to_dict
from src.ising_lab.core.models import Graph
from src.ising_lab.errors import ConstructionError, InvalidInputError
from src.ising_lab.utils.rng import RandomSource, as_rng

logger = logging.getLogger(__name__)

_FLOOR_SLACK = 1e-9


class GadgetOverrides(BaseModel):
    """Explicit desk-scale values; any field left as None is derived from (n, theta, psi)."""
    model_config = ConfigDict(frozen=True)

    m: Optional[int] = Field(default=None, ge=1)
    m_prime: Optional[int] = Field(default=None, ge=1)
    tree_depth: Optional[int] = Field(default=None, ge=0)
    match_size: Optional[int] = Field(default=None, ge=1)

    @property
    def any_set(self) -> bool:
        return any(v is not None for v in (self.m, self.m_prime, self.tree_depth, self.match_size))


class GadgetParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    m: int
    m_prime: int
    tree_depth: int
    match_size: int
    n_G: int


class GadgetSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    delta: int = Field(ge=3)
    n: int = Field(ge=1)
    theta: float = Field(default=0.1, gt=0.0, lt=0.125)
    psi: float = Field(default=0.1, gt=0.0, lt=0.125)
    overrides: GadgetOverrides = GadgetOverrides()
    max_matching_attempts: int = Field(default=100, ge=1)

    @property
    def log_n(self) -> float:
        """log_{Delta - 1} n."""
        return math.log(self.n) / math.log(self.delta - 1)

    def resolve(self) -> GadgetParams:
        branching = self.delta - 1
        exponent = math.floor(self.theta * self.log_n + _FLOOR_SLACK)
        depth = math.floor(self.psi * self.log_n + _FLOOR_SLACK)
        derived = {
            "m": branching ** exponent,
            "m_prime": branching ** (exponent + depth),
            "tree_depth": depth,
            "match_size": math.floor(self.n ** (0.75 * self.theta) + _FLOOR_SLACK),
        }
        if not self.overrides.any_set and (exponent == 0 or derived["match_size"] == 0):
            raise InvalidInputError(
                f"n={self.n} is too small for theta={self.theta}: the derived gadget is degenerate "
                f"(m exponent {exponent}, match_size {derived['match_size']}); pass overrides for desk-scale runs"
            )
        chosen = {key: getattr(self.overrides, key) if getattr(self.overrides, key) is not None else value
                  for key, value in derived.items()}
        leaves_per_tree = branching ** chosen["tree_depth"]
        if chosen["m"] * leaves_per_tree != chosen["m_prime"]:
            raise InvalidInputError(
                f"m' = {chosen['m_prime']} must equal m * (Delta-1)^tree_depth = {chosen['m'] * leaves_per_tree}"
            )
        # internal tree vertices per tree, root included, leaves (core W0 vertices) excluded
        internal = (leaves_per_tree - 1) // (branching - 1)
        n_G = 2 * (self.n + chosen["m_prime"] + chosen["m"] * internal)
        return GadgetParams(n_G=n_G, **chosen)


class Gadget(BaseModel):
    model_config = ConfigDict(frozen=True)

    delta: int
    params: GadgetParams
    graph: Graph
    side_left: Tuple[int, ...]
    side_right: Tuple[int, ...]
    u0: Tuple[int, ...]
    w0: Tuple[int, ...]
    terminals_left: Tuple[int, ...]
    terminals_right: Tuple[int, ...]
    u1: int

    @property
    def terminals(self) -> Tuple[int, ...]:
        return self.terminals_left + self.terminals_right

    def degree_census(self) -> Dict[int, int]:
        values, counts = np.unique(np.asarray(self.graph.degrees, dtype=np.int64), return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}


def _random_matchings(side: int, delta: int, attempts: int, rng: np.random.Generator) -> np.ndarray:
    """(delta, side) array whose row j is a permutation; rows pairwise disagree everywhere."""
    for attempt in range(1, attempts + 1):
        perms = np.stack([rng.permutation(side) for _ in range(delta)])
        disjoint = all(
            not np.any(perms[a] == perms[b]) for a in range(delta) for b in range(a + 1, delta)
        )
        if disjoint:
            if attempt > 1:
                logger.info("Matchings became disjoint after %d attempts", attempt)
            return perms
        logger.debug("Matching collision on attempt %d; resampling all %d matchings", attempt, delta)
    raise ConstructionError(f"no set of {delta} disjoint perfect matchings on {side}+{side} vertices in {attempts} attempts")


def _attach_trees(groups: List[List[int]], branching: int, next_vertex: int, edges: List[Tuple[int, int]]) -> Tuple[List[int], List[int], int]:
    """Builds one (Delta-1)-ary tree above each leaf group; returns (roots, new vertices, next free id)."""
    roots, created = [], []
    for leaves in groups:
        level = list(leaves)
        while len(level) > 1:
            parents = []
            for start in range(0, len(level), branching):
                parent = next_vertex
                next_vertex += 1
                created.append(parent)
                edges.extend((child, parent) for child in level[start:start + branching])
                parents.append(parent)
            level = parents
        roots.append(level[0])
    return roots, created, next_vertex


def build_gadget(spec: GadgetSpec, seed: RandomSource = 0) -> Gadget:
    params = spec.resolve()
    rng = as_rng(seed)
    delta, branching = spec.delta, spec.delta - 1
    side = spec.n + params.m_prime
    left = list(range(side))
    right = list(range(side, 2 * side))

    perms = _random_matchings(side, delta, spec.max_matching_attempts, rng)
    removed = np.sort(rng.choice(side, size=params.m_prime, replace=False))
    removed_set = set(removed.tolist())
    edges: List[Tuple[int, int]] = []
    for j in range(delta):
        for i in range(side):
            if j == delta - 1 and i in removed_set:
                continue
            edges.append((i, side + int(perms[j, i])))

    w0_left = removed.tolist()
    w0_right = sorted(side + int(perms[delta - 1, i]) for i in removed.tolist())
    per_tree = branching ** params.tree_depth
    next_vertex = 2 * side
    terminals_left, tree_left, next_vertex = _attach_trees(
        [w0_left[g * per_tree:(g + 1) * per_tree] for g in range(params.m)], branching, next_vertex, edges,
    )
    terminals_right, tree_right, next_vertex = _attach_trees(
        [w0_right[g * per_tree:(g + 1) * per_tree] for g in range(params.m)], branching, next_vertex, edges,
    )
    if next_vertex != params.n_G:
        raise ConstructionError(f"gadget has {next_vertex} vertices, expected n_G={params.n_G}")

    w0 = set(w0_left) | set(w0_right)
    u0 = tuple(v for v in left + right if v not in w0)
    graph = Graph(n=next_vertex, delta_cap=delta, edges=edges)
    gadget = Gadget(
        delta=delta,
        params=params,
        graph=graph,
        side_left=tuple(left + tree_left),
        side_right=tuple(right + tree_right),
        u0=u0,
        w0=tuple(sorted(w0)),
        terminals_left=tuple(terminals_left),
        terminals_right=tuple(terminals_right),
        u1=min(v for v in u0 if v < side),
    )
    logger.info(
        "Built gadget: Delta=%d n=%d m=%d m'=%d depth=%d n_G=%d |E|=%d",
        delta, spec.n, params.m, params.m_prime, params.tree_depth, graph.n, graph.num_edges,
    )
    return gadget


def gadget_to_dict(gadget: Gadget) -> Dict[str, Any]:
    record = graph_to_dict(gadget.graph)
    record.update({
        "u0": list(gadget.u0),
        "w0": list(gadget.w0),
        "terminals_left": list(gadget.terminals_left),
        "terminals_right": list(gadget.terminals_right),
        "u1": gadget.u1,
        "side_left": list(gadget.side_left),
        "side_right": list(gadget.side_right),
        "params": gadget.params.model_dump(),
    })
    return record


def gadget_from_dict(data: Dict[str, Any]) -> Gadget:
    graph = graph_from_dict(data)
    try:
        return Gadget(
            delta=graph.delta_cap,
            params=GadgetParams(**data["params"]),
            graph=graph,
            side_left=data["side_left"],
            side_right=data["side_right"],
            u0=data["u0"],
            w0=data["w0"],
            terminals_left=data["terminals_left"],
            terminals_right=data["terminals_right"],
            u1=data["u1"],
        )
    except KeyError as e:
        raise InvalidInputError(f"gadget record is missing key {e}") from e
    except ValidationError as e:
        raise InvalidInputError(f"invalid gadget: {e}") from e


def save_gadget(gadget: Gadget, path: Union[str, Path]) -> None:
    with Path(path).open("w") as f:
        json.dump(gadget_to_dict(gadget), f)


def load_gadget(path: Union[str, Path]) -> Gadget:
    path = Path(path)
    try:
        with path.open("r") as f:
            data = json.load(f)
    except FileNotFoundError as e:
        raise InvalidInputError(f"gadget file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise InvalidInputError(f"gadget file {path} is not valid JSON: {e}") from e
    return gadget_from_dict(data)
