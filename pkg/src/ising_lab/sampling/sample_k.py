"""
Sampling at fixed magnetization by searching over activities.

Binary search over an activity grid: at the median activity draw a batch from
mu_{G, beta, lambda}; the first draw with magnetization exactly k is the output.
Otherwise the batch mean of M decides which half of the grid survives. When the
grid runs out, the first (k + n)/2 vertices are set + and the rest -.
"""
import logging
import math
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.ising_lab.chains.kernels import ChainKind
from src.ising_lab.core.models import Graph, IsingParams, SpinConfig, check_magnetization
from src.ising_lab.errors import InvalidInputError, RegimeError
from src.ising_lab.oracle.enumeration import DEFAULT_ENUMERATION_CAP
from src.ising_lab.oracle.partition import mean_plus_count
from src.ising_lab.sampling.backends import MuSampler, make_mu_sampler
from src.ising_lab.tree.solver import DEFAULT_INVERSE_TOLERANCE, beta_critical, eta_c, lambda_for_eta
from src.ising_lab.utils.rng import SEED_LIMIT, child_seed, make_rng

logger = logging.getLogger(__name__)

MU_BACKENDS = (ChainKind.EXACT, ChainKind.GLAUBER, ChainKind.SW_GHOST)


class SampleKConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    delta: int = Field(ge=3)
    beta: float = Field(ge=0.0)
    eta: float = Field(ge=-1.0, le=1.0)
    epsilon: float = Field(gt=0.0, lt=1.0)
    sampler: ChainKind = ChainKind.EXACT
    sampler_sweeps: int = Field(default=200, ge=0)
    C: float = Field(default=4.0, gt=0.0)
    C_prime: float = Field(default=2.0, gt=0.0)
    seed: int = Field(default=0, ge=0, lt=SEED_LIMIT)
    batch_size: Optional[int] = Field(default=None, ge=1)
    draw_chunk: int = Field(default=64, ge=1)
    inverse_tolerance: float = Field(default=DEFAULT_INVERSE_TOLERANCE, gt=0.0)

    @field_validator("sampler")
    @classmethod
    def _grand_canonical_backend(cls, value: ChainKind) -> ChainKind:
        if value not in MU_BACKENDS:
            raise ValueError(f"mu-sampler must be one of {[k.value for k in MU_BACKENDS]}")
        return value


class TraceStep(BaseModel):
    model_config = ConfigDict(frozen=True)

    iteration: int
    lam: float
    k_bar: Optional[float] = None  # None when the batch produced a hit
    hit: bool = False
    draws: int


class SampleKResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    config: SpinConfig
    k: int
    fallback: bool
    flipped: bool
    lam: Optional[float] = None
    trace: Tuple[TraceStep, ...] = ()
    batch_size: int = 0
    iterations: int = 0
    grid_size: int = 0
    eps_prime: float = 0.0


def target_k(n: int, eta: float) -> int:
    """Largest k <= eta * n with k = n (mod 2): 2 * floor((eta + 1) n / 2) - n."""
    if n < 1:
        raise InvalidInputError("n must be positive")
    if not -1.0 <= eta <= 1.0:
        raise InvalidInputError(f"eta must lie in [-1, 1], got {eta}")
    exact_eta = Fraction(eta).limit_denominator(10 ** 9)
    return 2 * math.floor((exact_eta + 1) * n / 2) - n


def check_regime(delta: int, beta: float, eta: float) -> None:
    """Raises RegimeError unless beta < beta_c, or beta > beta_c and |eta| > eta_c."""
    critical = beta_critical(delta)
    if beta == critical:
        raise RegimeError(f"beta={beta} equals beta_c({delta}); neither regime applies")
    if beta > critical:
        threshold = eta_c(delta, beta)
        if abs(eta) <= threshold:
            raise RegimeError(f"eta={eta} <= eta_c={threshold:.9f} at beta={beta} > beta_c: outside the tractable regime")


def lambda_bounds(delta: int, beta: float, eta: float,
                  inverse_tolerance: float = DEFAULT_INVERSE_TOLERANCE) -> Tuple[float, float]:
    """
    Activity range that contains the lambda whose tree magnetization is eta.

    Below beta_c the search starts at lambda = 1; above it at the inverse tree map
    of eta, which needs eta > eta_c.
    """
    if not 0.0 <= eta < 1.0:
        raise InvalidInputError(f"lambda bounds need eta in [0, 1), got {eta}")
    check_regime(delta, beta, eta)
    if beta < beta_critical(delta):
        lam_min = 1.0
    else:
        lam_min = lambda_for_eta(delta, beta, eta, tolerance=inverse_tolerance)
    lam_max = math.sqrt((1.0 + eta) / (1.0 - eta)) * math.exp(0.5 * beta * delta)
    return lam_min, max(lam_min, lam_max)


def activity_grid(lam_min: float, lam_max: float, n: int) -> np.ndarray:
    """lam_min + t/n for t = 0..floor((lam_max - lam_min) n)."""
    steps = math.floor((lam_max - lam_min) * n + 1e-9)
    return lam_min + np.arange(steps + 1) / n


def search_sizes(n: int, epsilon: float, C: float, C_prime: float, batch_size: Optional[int] = None) -> Tuple[int, int, float]:
    """(iterations, batch size N, eps') with log n floored at 1."""
    log_n = max(1.0, math.log(n))
    iterations = math.ceil(C * log_n)
    batch = batch_size if batch_size is not None else math.ceil(C_prime * n * n * math.log(log_n / epsilon))
    eps_prime = 1.0 / (C * batch * log_n)
    return iterations, batch, eps_prime


def _first_hit(
    mu: MuSampler,
    lam: float,
    k: int,
    batch: int,
    chunk: int,
    rng: np.random.Generator,
) -> Tuple[Optional[np.ndarray], float, int]:
    """Draws lazily up to ``batch`` samples; returns (hit or None, mean M, draws made)."""
    total = 0.0
    drawn = 0
    while drawn < batch:
        size = min(chunk, batch - drawn)
        spins = mu.draw(lam, size, rng)
        magnetizations = spins.sum(axis=1, dtype=np.int64)
        hits = np.flatnonzero(magnetizations == k)
        if hits.size:
            return spins[hits[0]].copy(), math.nan, drawn + int(hits[0]) + 1
        total += float(magnetizations.sum())
        drawn += size
    return None, total / drawn, drawn


def sample_at_k(graph: Graph, k: int, config: SampleKConfig, mu: Optional[MuSampler] = None, jobs: int = 1,
                cap: int = DEFAULT_ENUMERATION_CAP) -> SampleKResult:
    """
    Sample-k for an explicit magnetization k. Negative k is sampled at -k and
    flipped; the search uses |eta| for its activity bounds.
    """
    n = graph.n
    check_magnetization(n, k)
    if graph.max_degree > config.delta:
        raise InvalidInputError(f"graph max degree {graph.max_degree} exceeds delta={config.delta}")
    eta = abs(config.eta)
    check_regime(config.delta, config.beta, eta)
    if k == n or k == -n:
        return SampleKResult(config=SpinConfig(spins=(1 if k > 0 else -1,) * n), k=k, fallback=False, flipped=k < 0)

    flipped = k < 0
    target = -k if flipped else k
    lam_min, lam_max = lambda_bounds(config.delta, config.beta, eta, config.inverse_tolerance)
    grid = activity_grid(lam_min, lam_max, n)
    iterations, batch, eps_prime = search_sizes(n, config.epsilon, config.C, config.C_prime, config.batch_size)
    if mu is None:
        mu = make_mu_sampler(graph, config.beta, config.sampler, config.sampler_sweeps, jobs, cap)
    rng = make_rng(config.seed)
    logger.debug("Sample-k: n=%d k=%d grid=%d iterations=%d N=%d eps'=%.2e", n, k, grid.size, iterations, batch, eps_prime)

    trace: List[TraceStep] = []
    low, high = 0, grid.size
    found: Optional[np.ndarray] = None
    lam_hit: Optional[float] = None
    for iteration in range(1, iterations + 1):
        if low >= high:
            break
        median = low + (high - low - 1) // 2
        lam = float(grid[median])
        hit, k_bar, drawn = _first_hit(mu, lam, target, batch, config.draw_chunk, rng)
        if hit is not None:
            trace.append(TraceStep(iteration=iteration, lam=lam, hit=True, draws=drawn))
            found, lam_hit = hit, lam
            break
        trace.append(TraceStep(iteration=iteration, lam=lam, k_bar=k_bar, draws=drawn))
        if k_bar <= target:
            low = median + 1
        else:
            high = median

    fallback = found is None
    if fallback:
        logger.warning("Sample-k found no magnetization-%d draw after %d iterations; using the fallback config", target, len(trace))
        spins = SpinConfig.first_plus(n, target).as_array()
    else:
        spins = found
    if flipped:
        spins = -spins
    return SampleKResult(
        config=SpinConfig.from_array(spins),
        k=k,
        fallback=fallback,
        flipped=flipped,
        lam=lam_hit,
        trace=tuple(trace),
        batch_size=batch,
        iterations=iterations,
        grid_size=int(grid.size),
        eps_prime=eps_prime,
    )


def run_sample_k(graph: Graph, config: SampleKConfig, mu: Optional[MuSampler] = None, jobs: int = 1,
                 cap: int = DEFAULT_ENUMERATION_CAP) -> SampleKResult:
    return sample_at_k(graph, target_k(graph.n, config.eta), config, mu=mu, jobs=jobs, cap=cap)


def sample_fixed_mag(graph: Graph, config: SampleKConfig, jobs: int = 1, cap: int = DEFAULT_ENUMERATION_CAP) -> SpinConfig:
    """A configuration with magnetization exactly target_k(n, eta)."""
    return run_sample_k(graph, config, jobs=jobs, cap=cap).config


def binary_search_trace(graph: Graph, config: SampleKConfig, jobs: int = 1, cap: int = DEFAULT_ENUMERATION_CAP) -> List[Tuple[float, Optional[float]]]:
    """(lambda, k_bar) per visited grid point; k_bar is None at the halting hit."""
    return [(step.lam, step.k_bar) for step in run_sample_k(graph, config, jobs=jobs, cap=cap).trace]


class SampleKNuSampler:
    """nu-sampler backed by Sample-k; each draw is a full Sample-k run on a child seed."""

    def __init__(self, graph: Graph, template: SampleKConfig, jobs: int = 1, cap: int = DEFAULT_ENUMERATION_CAP):
        self.graph = graph
        self.template = template
        self.jobs = jobs
        self.cap = cap

    def draw(self, beta: float, k: int, count: int, rng: np.random.Generator) -> np.ndarray:
        eta = abs(k) / self.graph.n
        rows = []
        mu = None
        for _ in range(count):
            config = self.template.model_copy(update={"beta": beta, "eta": eta, "seed": child_seed(rng)})
            if mu is None:
                mu = make_mu_sampler(self.graph, beta, config.sampler, config.sampler_sweeps, self.jobs, self.cap)
            rows.append(sample_at_k(self.graph, k, config, mu=mu).config.as_array())
        if not rows:
            return np.zeros((0, self.graph.n), dtype=np.int8)
        return np.stack(rows)


def grid_gap(graph: Graph, delta: int, beta: float, eta: float, cap: int = DEFAULT_ENUMERATION_CAP) -> Tuple[float, float]:
    """
    (min over the activity grid of |<X>_lambda - l|, the minimizing lambda), with
    l = (n + k)/2 for k = target_k(n, |eta|), by exact enumeration.
    """
    n = graph.n
    target = abs(target_k(n, eta))
    ell = (n + target) / 2.0
    lam_min, lam_max = lambda_bounds(delta, beta, abs(eta))
    grid = activity_grid(lam_min, lam_max, n)
    gaps = np.array([abs(mean_plus_count(graph, IsingParams(beta=beta, lam=float(lam)), cap) - ell) for lam in grid])
    best = int(np.argmin(gaps))
    return float(gaps[best]), float(grid[best])
