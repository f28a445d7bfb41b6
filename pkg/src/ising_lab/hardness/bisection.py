"""Cut recovery from fixed-magnetization partition functions, and exact gamma-balanced min cuts."""
import logging
import math
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from src.ising_lab.core.models import Graph
from src.ising_lab.errors import CapacityError, InvalidInputError
from src.ising_lab.hardness.reduction import GammaLike, balanced_sizes
from src.ising_lab.oracle.enumeration import cut_counts, popcount, state_indices

logger = logging.getLogger(__name__)

MEBC_HOST_LIMIT = 20


class CutInterval(BaseModel):
    model_config = ConfigDict(frozen=True)

    center: float
    low: float
    high: float
    theta: float
    gamma_const: float

    def as_tuple(self) -> Tuple[float, float]:
        return self.low, self.high


def theta_gamma(beta: float, q: float) -> Tuple[float, float]:
    """
    Theta = 2q(1-q)e^{beta/2} + (q^2 + (1-q)^2)e^{-beta/2}
    Gamma = 2q(1-q)e^{-beta/2} + (q^2 + (1-q)^2)e^{beta/2}
    """
    if not 0.5 <= q <= 1.0:
        raise InvalidInputError(f"q must lie in [1/2, 1], got {q}")
    if beta < 0:
        raise InvalidInputError("beta must be nonnegative")
    mixed = 2.0 * q * (1.0 - q)
    same = q * q + (1.0 - q) ** 2
    up, down = math.exp(0.5 * beta), math.exp(-0.5 * beta)
    return mixed * up + same * down, mixed * down + same * up


def recover_cut_interval(
    log_z_free: float,
    log_z_fixed: float,
    match_size: int,
    host_edge_count: int,
    n: int,
    h: int,
    beta: float,
    q: float,
    C: float = 1.0,
    C_prime: float = 1.0,
) -> CutInterval:
    """
    Interval for the gamma-balanced min cut b of the host:

        T = [log(Z_free / Z_fix) + 2k|E(H)| log Gamma - log sqrt(nh)] / (2k log(Gamma/Theta))
        b in [T - log(2^h / C') / (2k log(Gamma/Theta)), T + log C / (2k log(Gamma/Theta))]
    """
    if match_size < 1 or n < 1 or h < 1:
        raise InvalidInputError("match_size, n and h must be positive")
    if C <= 0 or C_prime <= 0:
        raise InvalidInputError("C and C' must be positive")
    theta, gamma_const = theta_gamma(beta, q)
    if gamma_const <= theta:
        raise InvalidInputError(f"degenerate constants: Gamma={gamma_const} <= Theta={theta}")
    scale = 2.0 * match_size * math.log(gamma_const / theta)
    center = (log_z_free - log_z_fixed + 2.0 * match_size * host_edge_count * math.log(gamma_const)
              - 0.5 * math.log(n * h)) / scale
    low = center - (h * math.log(2.0) - math.log(C_prime)) / scale
    high = center + math.log(C) / scale
    return CutInterval(center=center, low=low, high=high, theta=theta, gamma_const=gamma_const)


def brute_force_mebc(host: Graph, gamma: GammaLike) -> int:
    """Minimum |E(S, S^c)| over all S with |S| = floor(gamma h), by exhaustive search."""
    h = host.n
    if h > MEBC_HOST_LIMIT:
        raise CapacityError(f"exhaustive min cut supports h <= {MEBC_HOST_LIMIT}, got {h}")
    h_plus, _ = balanced_sizes(h, gamma)
    if host.num_edges == 0:
        return 0
    subsets = state_indices(h)
    subsets = subsets[popcount(subsets, bits=max(8, h)) == h_plus]
    best = int(np.min(cut_counts(host, subsets)))
    logger.debug("gamma-MEBC of h=%d host with |S|=%d: %d", h, h_plus, best)
    return best
