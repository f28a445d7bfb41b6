"""Exact partition functions and magnetization moments."""
import logging
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator
from scipy.optimize import brentq
from scipy.special import logsumexp

from src.ising_lab.core.models import Graph, IsingParams, check_magnetization
from src.ising_lab.errors import InvalidInputError
from src.ising_lab.oracle.enumeration import DEFAULT_ENUMERATION_CAP, density_of_states

logger = logging.getLogger(__name__)


class FixedPartitionVector(BaseModel):
    """log Z^fix(beta, 2l - n) for every plus-count l = 0..n."""
    model_config = ConfigDict(frozen=True)

    n: int
    beta: float
    log_values: Tuple[float, ...]

    @field_validator("log_values")
    @classmethod
    def _all_finite(cls, value: Tuple[float, ...]) -> Tuple[float, ...]:
        if not all(np.isfinite(v) for v in value):
            raise ValueError("every plus-count has positive weight; got a non-finite log value")
        return value

    def log_value(self, k: int) -> float:
        check_magnetization(self.n, k)
        return self.log_values[(self.n + k) // 2]

    def value(self, k: int) -> float:
        return float(np.exp(self.log_value(k)))

    def log_evaluate(self, lam: float) -> float:
        """log sum_l Z^fix(2l - n) * lam^(2l - n), which equals log Z(beta, lam)."""
        ell = np.arange(self.n + 1)
        return float(logsumexp(np.asarray(self.log_values) + (2 * ell - self.n) * np.log(lam)))


def partition_function(graph: Graph, params: IsingParams, cap: int = DEFAULT_ENUMERATION_CAP) -> float:
    """Exact log Z_G(beta, lambda)."""
    return density_of_states(graph, cap).log_partition(params)


def fixed_partition_vector(graph: Graph, beta: float, cap: int = DEFAULT_ENUMERATION_CAP) -> FixedPartitionVector:
    if beta < 0:
        raise InvalidInputError("beta must be nonnegative")
    log_values = density_of_states(graph, cap).log_fixed_vector(beta)
    return FixedPartitionVector(n=graph.n, beta=beta, log_values=tuple(float(v) for v in log_values))


def log_fixed_partition(graph: Graph, beta: float, k: int, cap: int = DEFAULT_ENUMERATION_CAP) -> float:
    return fixed_partition_vector(graph, beta, cap).log_value(k)


def plus_count_pmf(graph: Graph, params: IsingParams, cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    """Exact law of X, the number of +1 spins, under mu_{G, beta, lambda}."""
    return density_of_states(graph, cap).plus_pmf(params)


def pmf_moments(pmf: np.ndarray) -> Tuple[float, float]:
    ell = np.arange(len(pmf))
    mean = float(np.dot(pmf, ell))
    variance = float(np.dot(pmf, (ell - mean) ** 2))
    return mean, variance


def mean_plus_count(graph: Graph, params: IsingParams, cap: int = DEFAULT_ENUMERATION_CAP) -> float:
    return pmf_moments(plus_count_pmf(graph, params, cap))[0]


def mean_magnetization(graph: Graph, params: IsingParams, cap: int = DEFAULT_ENUMERATION_CAP) -> float:
    """eta_G(beta, lambda) = <M> / n."""
    if graph.n == 0:
        raise InvalidInputError("mean magnetization is undefined on the empty vertex set")
    if params.lam == 1.0:
        return 0.0
    mean_x = mean_plus_count(graph, params, cap)
    return (2.0 * mean_x - graph.n) / graph.n


def variance_of_X(graph: Graph, params: IsingParams, cap: int = DEFAULT_ENUMERATION_CAP) -> float:
    return pmf_moments(plus_count_pmf(graph, params, cap))[1]


def magnetization_derivative(graph: Graph, params: IsingParams, cap: int = DEFAULT_ENUMERATION_CAP) -> float:
    """
    d eta_G / d lambda = var(M) / (n * lambda) = 4 var(X) / (n * lambda).
    """
    return 4.0 * variance_of_X(graph, params, cap) / (graph.n * params.lam)


def lambda_for_mean(
    graph: Graph,
    beta: float,
    target_plus: float,
    lam_low: float = 1e-6,
    lam_high: float = 1e6,
    cap: int = DEFAULT_ENUMERATION_CAP,
    xtol: float = 1e-12,
) -> float:
    """Activity at which <X> equals ``target_plus``; <X> is strictly increasing in lambda."""
    if not 0 < target_plus < graph.n:
        raise InvalidInputError(f"target mean {target_plus} must lie strictly between 0 and n={graph.n}")

    def residual(lam: float) -> float:
        return mean_plus_count(graph, IsingParams(beta=beta, lam=lam), cap) - target_plus

    if residual(lam_low) > 0 or residual(lam_high) < 0:
        raise InvalidInputError(f"target mean {target_plus} not bracketed by lambda in [{lam_low}, {lam_high}]")
    return float(brentq(residual, lam_low, lam_high, xtol=xtol))
