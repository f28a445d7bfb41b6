"""
The composite graph H^G_s: one gadget copy per host vertex, s isolated vertices,
and for every host edge xy a matching of match_size left terminals of G^x with
left terminals of G^y plus the same on the right.
"""
import json
import logging
import math
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from src.ising_lab.core.graph_io import graph_from_dict, graph_to_dict
from src.ising_lab.core.models import Edge, Graph, IsingParams
from src.ising_lab.errors import InfeasibleParameterError, InvalidInputError, TerminalExhaustionError
from src.ising_lab.hardness.gadget import Gadget, GadgetSpec, build_gadget, gadget_from_dict, gadget_to_dict
from src.ising_lab.oracle.enumeration import DEFAULT_ENUMERATION_CAP
from src.ising_lab.oracle.partition import log_fixed_partition, partition_function
from src.ising_lab.tree.solver import beta_critical, eta_c
from src.ising_lab.utils.rng import make_rng

logger = logging.getLogger(__name__)

GammaLike = Union[Fraction, str, float, int]


def as_fraction(gamma: GammaLike) -> Fraction:
    try:
        value = Fraction(gamma) if not isinstance(gamma, float) else Fraction(gamma).limit_denominator(10 ** 6)
    except (ValueError, ZeroDivisionError) as e:
        raise InvalidInputError(f"gamma must be a rational number, got {gamma!r}") from e
    if not 0 < value <= 1:
        raise InvalidInputError(f"gamma must lie in (0, 1], got {value}")
    return value


def balanced_sizes(h: int, gamma: GammaLike) -> Tuple[int, int]:
    """(h_plus, h_minus) = (floor(gamma h), ceil((1 - gamma) h))."""
    gamma = as_fraction(gamma)
    h_plus = math.floor(gamma * h)
    return h_plus, h - h_plus


class ReductionInstance(BaseModel):
    model_config = ConfigDict(frozen=True)

    host: Graph
    gamma_numerator: int
    gamma_denominator: int
    eta: float
    gadget: Gadget
    s: int
    h_plus: int
    h_minus: int
    N: int
    ell: int
    crossing_edges: Tuple[Edge, ...]
    composite: Graph
    s_condition_gap: Optional[float] = None

    @property
    def gamma(self) -> Fraction:
        return Fraction(self.gamma_numerator, self.gamma_denominator)

    @property
    def h(self) -> int:
        return self.host.n

    @property
    def M_star(self) -> int:
        return self.h_plus - self.h_minus

    @property
    def target_k(self) -> int:
        """Magnetization 2*ell - N asked for on the composite."""
        return 2 * self.ell - self.N

    @property
    def match_size(self) -> int:
        return self.gadget.params.match_size


def _choose_s(n: int, h: int, n_G: int, h_plus: int, h_minus: int, eta: float, critical_eta: float) -> Tuple[int, float]:
    """Nonnegative s with |2n(h+ - h-)eta_c - eta(h n_G + s)| <= sqrt(nh)."""
    lhs = 2.0 * n * (h_plus - h_minus) * critical_eta
    ideal = lhs / eta - h * n_G
    candidates = {max(0, math.floor(ideal)), max(0, math.ceil(ideal))}
    best = min(candidates, key=lambda s: abs(lhs - eta * (h * n_G + s)))
    gap = abs(lhs - eta * (h * n_G + best))
    if gap > math.sqrt(n * h):
        raise InfeasibleParameterError(
            f"no s >= 0 satisfies the isolated-vertex condition: best s={best} leaves a gap of {gap:.3f} > sqrt(nh)={math.sqrt(n * h):.3f}"
        )
    return best, gap


def _crossing_matchings(host: Graph, gadget: Gadget, rng: np.random.Generator) -> List[Edge]:
    """First-fit over sorted host edges; each copy hands out terminals in one seeded order."""
    n_G = gadget.graph.n
    size = gadget.params.match_size
    orders = {
        "left": [int(t) for t in rng.permutation(np.asarray(gadget.terminals_left))],
        "right": [int(t) for t in rng.permutation(np.asarray(gadget.terminals_right))],
    }
    used = {side: [0] * host.n for side in orders}
    crossing = []
    for x, y in host.edges:
        for side, order in orders.items():
            for vertex in (x, y):
                if used[side][vertex] + size > len(order):
                    raise TerminalExhaustionError(f"gadget copy {vertex} ran out of {side} terminals")
            for i in range(size):
                u = x * n_G + order[used[side][x] + i]
                v = y * n_G + order[used[side][y] + i]
                crossing.append((u, v))
            used[side][x] += size
            used[side][y] += size
    return crossing


def build_reduction(
    host: Graph,
    gamma: GammaLike,
    spec: GadgetSpec,
    eta: float,
    seed: int = 0,
    beta: Optional[float] = None,
    gadget: Optional[Gadget] = None,
) -> ReductionInstance:
    """
    Assembles H^G_s. With eta > 0 the isolated-vertex count s is found by integer
    search and needs beta > beta_c, eta < eta_c and gamma in ((1 + eta/eta_c)/2, 1).
    With eta = 0 only the demonstration mode gamma = 1/2, s = 0 is available.
    """
    gamma = as_fraction(gamma)
    h = host.n
    if not 0.0 <= eta < 1.0:
        raise InvalidInputError(f"eta must lie in [0, 1), got {eta}")
    h_plus, h_minus = balanced_sizes(h, gamma)
    if min(h_plus, h_minus) < 1:
        raise InvalidInputError(f"h={h} with gamma={gamma} leaves an empty side (h+={h_plus}, h-={h_minus})")
    if gadget is None:
        gadget = build_gadget(spec, make_rng(seed, 0))
    params = gadget.params

    if not spec.overrides.any_set:
        h_limit = spec.n ** (spec.theta / 4.0) / (spec.delta - 1)
        if h > h_limit:
            raise InvalidInputError(f"host has h={h} vertices, above n^(theta/4)/(Delta-1) = {h_limit:.3f}")
        if params.match_size * h > params.m:
            raise TerminalExhaustionError(f"match_size * h = {params.match_size * h} exceeds m = {params.m}")
    if host.n:
        degrees = np.asarray(host.degrees, dtype=np.int64)
        short = np.flatnonzero(params.match_size * degrees > params.m)
        if short.size:
            raise TerminalExhaustionError(
                f"host vertices {short.tolist()} need match_size * degree > m = {params.m} terminals per side"
            )

    gap: Optional[float] = None
    if eta == 0.0:
        if gamma != Fraction(1, 2):
            raise InfeasibleParameterError(
                "with eta = 0 the isolated-vertex condition cannot hold for gamma > 1/2; use gamma = 1/2 (s = 0)"
            )
        s = 0
    else:
        if beta is None or beta <= beta_critical(spec.delta):
            raise InfeasibleParameterError(f"eta > 0 needs beta > beta_c({spec.delta}); got beta={beta}")
        critical_eta = eta_c(spec.delta, beta)
        if eta >= critical_eta:
            raise InfeasibleParameterError(f"eta={eta} must be below eta_c={critical_eta:.6f}")
        low = (1.0 + eta / critical_eta) / 2.0
        if not low < gamma < 1:
            raise InfeasibleParameterError(f"gamma={gamma} must lie in ({low:.6f}, 1)")
        s, gap = _choose_s(spec.n, h, params.n_G, h_plus, h_minus, eta, critical_eta)

    crossing = _crossing_matchings(host, gadget, make_rng(seed, 1))
    n_G = gadget.graph.n
    edges = [(x * n_G + u, x * n_G + v) for x in range(h) for u, v in gadget.graph.edges]
    N = h * n_G + s
    composite = Graph(n=N, delta_cap=spec.delta, edges=edges + crossing)
    eta_exact = Fraction(eta).limit_denominator(10 ** 9)
    ell = math.floor(N * (eta_exact + 1) / 2)
    logger.info(
        "Built reduction: h=%d |E(H)|=%d n_G=%d s=%d N=%d crossing=%d ell=%d",
        h, host.num_edges, n_G, s, N, len(crossing), ell,
    )
    return ReductionInstance(
        host=host,
        gamma_numerator=gamma.numerator,
        gamma_denominator=gamma.denominator,
        eta=eta,
        gadget=gadget,
        s=s,
        h_plus=h_plus,
        h_minus=h_minus,
        N=N,
        ell=ell,
        crossing_edges=tuple(crossing),
        composite=composite,
        s_condition_gap=gap,
    )


def free_log_partition(instance: ReductionInstance, beta: float, cap: int = DEFAULT_ENUMERATION_CAP) -> float:
    """log Z of the composite without crossing edges at lambda = 1: h log Z_G + s log 2."""
    gadget_log_z = partition_function(instance.gadget.graph, IsingParams(beta=beta, lam=1.0), cap)
    return instance.h * gadget_log_z + instance.s * math.log(2.0)


def fixed_log_partition(instance: ReductionInstance, beta: float, cap: int = DEFAULT_ENUMERATION_CAP) -> float:
    """log Z^fix of the composite at magnetization 2*ell - N."""
    return log_fixed_partition(instance.composite, beta, instance.target_k, cap)


def instance_to_dict(instance: ReductionInstance) -> Dict[str, Any]:
    record = graph_to_dict(instance.composite)
    record.update({
        "s": instance.s,
        "match_size": instance.match_size,
        "crossing_edges": [list(e) for e in instance.crossing_edges],
        "host": graph_to_dict(instance.host),
        "gamma": str(instance.gamma),
        "eta": instance.eta,
        "h_plus": instance.h_plus,
        "h_minus": instance.h_minus,
        "M_star": instance.M_star,
        "N": instance.N,
        "ell": instance.ell,
        "gadget": gadget_to_dict(instance.gadget),
    })
    return record


def instance_from_dict(data: Dict[str, Any]) -> ReductionInstance:
    try:
        gamma = as_fraction(data["gamma"])
        return ReductionInstance(
            host=graph_from_dict(data["host"]),
            gamma_numerator=gamma.numerator,
            gamma_denominator=gamma.denominator,
            eta=data["eta"],
            gadget=gadget_from_dict(data["gadget"]),
            s=data["s"],
            h_plus=data["h_plus"],
            h_minus=data["h_minus"],
            N=data["N"],
            ell=data["ell"],
            crossing_edges=tuple(tuple(e) for e in data["crossing_edges"]),
            composite=graph_from_dict(data),
        )
    except KeyError as e:
        raise InvalidInputError(f"instance record is missing key {e}") from e
    except ValidationError as e:
        raise InvalidInputError(f"invalid instance: {e}") from e


def save_instance(instance: ReductionInstance, path: Union[str, Path]) -> None:
    with Path(path).open("w") as f:
        json.dump(instance_to_dict(instance), f)


def load_instance(path: Union[str, Path]) -> ReductionInstance:
    path = Path(path)
    try:
        with path.open("r") as f:
            data = json.load(f)
    except FileNotFoundError as e:
        raise InvalidInputError(f"instance file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise InvalidInputError(f"instance file {path} is not valid JSON: {e}") from e
    return instance_from_dict(data)
