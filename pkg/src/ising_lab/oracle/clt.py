"""Local central limit diagnostic for the plus-count X."""
import logging
import math

import numpy as np
from scipy.stats import norm

from src.ising_lab.core.models import Graph, IsingParams
from src.ising_lab.oracle.enumeration import DEFAULT_ENUMERATION_CAP
from src.ising_lab.oracle.partition import pmf_moments, plus_count_pmf

logger = logging.getLogger(__name__)


def clt_deviation(graph: Graph, params: IsingParams, cap: int = DEFAULT_ENUMERATION_CAP) -> float:
    """
    max_l |P(X = l) - phi(l)| * sqrt(2 pi var X), with phi the Gaussian density of
    matching mean and variance.

    Diagnostic only: degenerate laws (zero variance) return inf.
    """
    pmf = plus_count_pmf(graph, params, cap)
    mean, variance = pmf_moments(pmf)
    if variance <= 0.0:
        logger.warning("X is degenerate on n=%d; local CLT deviation reported as inf", graph.n)
        return math.inf
    ell = np.arange(len(pmf))
    gaussian = norm.pdf(ell, loc=mean, scale=math.sqrt(variance))
    return float(np.max(np.abs(pmf - gaussian)) * math.sqrt(2.0 * math.pi * variance))
