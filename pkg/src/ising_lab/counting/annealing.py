"""
Approximate counting of Z^fix_G(beta, k) by simulated annealing.

Z^fix(beta) = C(n, (n + k)/2) * prod_i <exp(((beta_{i+1} - beta_i)/2) * delta)>_{beta_i, k}
over the cooling schedule beta_i = i * log(1 + 1/n), each ratio estimated from S
draws of a fixed-magnetization sampler.
"""
import logging
import math
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from src.ising_lab.chains.kernels import KawasakiVariant
from src.ising_lab.core.models import Graph, check_magnetization
from src.ising_lab.errors import InvalidInputError, SamplerError
from src.ising_lab.oracle.enumeration import DEFAULT_ENUMERATION_CAP
from src.ising_lab.oracle.partition import fixed_partition_vector
from src.ising_lab.sampling.backends import ExactNuSampler, KawasakiNuSampler, NuSampler
from src.ising_lab.sampling.sample_k import SampleKConfig, SampleKNuSampler
from src.ising_lab.utils.rng import make_rng

logger = logging.getLogger(__name__)

DEFAULT_SAMPLE_CONSTANT = 8.0
DEFAULT_TV_CONSTANT = 8.0
_SCHEDULE_SLACK = 1e-12


class NuKind(str, Enum):
    EXACT = "exact"
    SAMPLE_K = "sample_k"
    KAWASAKI_LOCAL = "kawasaki_local"
    KAWASAKI_GLOBAL = "kawasaki_global"


class CoolingSchedule(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    betas: Tuple[float, ...]
    sample_count: int = Field(ge=0)
    sampler_tv: Optional[float] = None
    epsilon: Optional[float] = None

    @property
    def length(self) -> int:
        return len(self.betas) - 1

    @property
    def max_gap(self) -> float:
        if self.length == 0:
            return 0.0
        return float(np.max(np.diff(self.betas)))

    def pairs(self) -> List[Tuple[float, float]]:
        return list(zip(self.betas[:-1], self.betas[1:]))


class StageRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    stage: int
    beta: float
    beta_next: float
    samples: int
    mean: float
    variance: float
    max_term: float


class AnnealingEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    log_value: float
    log_binomial: float
    k: int
    beta: float
    schedule: CoolingSchedule
    stages: Tuple[StageRecord, ...] = ()
    run_log_values: Tuple[float, ...] = ()

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


def build_schedule(
    n: int,
    beta: float,
    epsilon: Optional[float] = None,
    sample_constant: float = DEFAULT_SAMPLE_CONSTANT,
    tv_constant: float = DEFAULT_TV_CONSTANT,
) -> CoolingSchedule:
    """
    beta_0 = 0 and beta_i = i * log(1 + 1/n) for i < l, with beta_l = beta and
    l = ceil(beta / log(1 + 1/n)). With epsilon, S = ceil(c * l / eps^2) and
    xi = eps / (c' * l).
    """
    if n < 1:
        raise InvalidInputError("the schedule needs n >= 1")
    if beta < 0:
        raise InvalidInputError("beta must be nonnegative")
    if epsilon is not None and not 0.0 < epsilon < 1.0:
        raise InvalidInputError(f"epsilon must lie in (0, 1), got {epsilon}")
    step = math.log1p(1.0 / n)
    length = math.ceil(beta / step - _SCHEDULE_SLACK) if beta > 0 else 0
    betas = tuple(i * step for i in range(length)) + ((beta,) if length else (0.0,))
    sample_count, sampler_tv = 0, None
    if epsilon is not None and length:
        sample_count = math.ceil(sample_constant * length / epsilon ** 2)
        sampler_tv = epsilon / (tv_constant * length)
    logger.debug("Cooling schedule: n=%d beta=%.4f l=%d S=%d", n, beta, length, sample_count)
    return CoolingSchedule(n=n, betas=betas, sample_count=sample_count, sampler_tv=sampler_tv, epsilon=epsilon)


def _interaction_sums(graph: Graph, spins: np.ndarray) -> np.ndarray:
    us, vs = graph.edge_endpoints()
    if not len(us):
        return np.zeros(len(spins), dtype=np.int64)
    return (spins[:, us].astype(np.int64) * spins[:, vs]).sum(axis=1)


def stage_terms(
    graph: Graph,
    k: int,
    beta_i: float,
    beta_next: float,
    S: int,
    sampler: NuSampler,
    rng: np.random.Generator,
) -> np.ndarray:
    """S evaluations of exp(((beta_next - beta_i)/2) * delta(sigma)) with sigma ~ nu_{beta_i, k}."""
    if S <= 0:
        raise InvalidInputError("a ratio estimate needs at least one sample")
    if beta_next < beta_i:
        raise InvalidInputError(f"schedule must increase: beta_next={beta_next} < beta_i={beta_i}")
    spins = sampler.draw(beta_i, k, S, rng)
    if spins.shape != (S, graph.n):
        raise SamplerError(f"sampler returned shape {spins.shape}, expected {(S, graph.n)}")
    off_target = np.flatnonzero(spins.sum(axis=1, dtype=np.int64) != k)
    if off_target.size:
        raise SamplerError(f"{off_target.size} of {S} draws missed magnetization {k}")
    return np.exp(0.5 * (beta_next - beta_i) * _interaction_sums(graph, spins))


def estimate_ratio(
    graph: Graph,
    k: int,
    beta_i: float,
    beta_next: float,
    S: int,
    sampler: NuSampler,
    rng: np.random.Generator,
) -> float:
    """Sample mean estimate of Z^fix(beta_next, k) / Z^fix(beta_i, k)."""
    if S <= 0:
        raise InvalidInputError("a ratio estimate needs at least one sample")
    if beta_next == beta_i:
        return 1.0
    return float(stage_terms(graph, k, beta_i, beta_next, S, sampler, rng).mean())


def log_binomial(n: int, k: int) -> float:
    return math.log(math.comb(n, (n + k) // 2))


def _single_run(
    graph: Graph,
    schedule: CoolingSchedule,
    k: int,
    sample_count: int,
    sampler: NuSampler,
    seed: int,
    run: Optional[int],
) -> Tuple[float, List[StageRecord]]:
    total = log_binomial(graph.n, k)
    records = []
    for i, (beta_i, beta_next) in enumerate(schedule.pairs()):
        rng = make_rng(seed, i) if run is None else make_rng(seed, run, i)
        terms = stage_terms(graph, k, beta_i, beta_next, sample_count, sampler, rng)
        mean = float(terms.mean())
        total += math.log(mean)
        records.append(StageRecord(
            stage=i, beta=beta_i, beta_next=beta_next, samples=sample_count, mean=mean,
            variance=float(terms.var(ddof=1)) if sample_count > 1 else 0.0, max_term=float(terms.max()),
        ))
    return total, records


def count_fixed(
    graph: Graph,
    beta: float,
    k: int,
    epsilon: float,
    sampler: NuSampler,
    seed: int,
    amplify: bool = False,
    sample_count: Optional[int] = None,
    sample_constant: float = DEFAULT_SAMPLE_CONSTANT,
    tv_constant: float = DEFAULT_TV_CONSTANT,
) -> AnnealingEstimate:
    """
    log of the annealing estimate of Z^fix_G(beta, k). Stage i of a run draws from
    substream (seed, i); with ``amplify`` run r uses (seed, r, i) and the median of
    three runs is reported.
    """
    check_magnetization(graph.n, k)
    schedule = build_schedule(graph.n, beta, epsilon, sample_constant, tv_constant)
    samples = sample_count if sample_count is not None else schedule.sample_count
    if schedule.length and samples <= 0:
        raise InvalidInputError("sample_count must be positive")
    logger.info("Annealing: n=%d k=%d beta=%.4f stages=%d S=%d", graph.n, k, beta, schedule.length, samples)

    if amplify:
        runs = [_single_run(graph, schedule, k, samples, sampler, seed, r) for r in range(3)]
        log_values = [value for value, _ in runs]
        middle = int(np.argsort(log_values)[1])
        log_value, stages = runs[middle]
    else:
        log_value, stages = _single_run(graph, schedule, k, samples, sampler, seed, None)
        log_values = [log_value]
    return AnnealingEstimate(
        log_value=log_value,
        log_binomial=log_binomial(graph.n, k),
        k=k,
        beta=beta,
        schedule=schedule,
        stages=tuple(stages),
        run_log_values=tuple(log_values),
    )


def exact_stage_ratios(graph: Graph, schedule: CoolingSchedule, k: int, cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    """log(Z^fix(beta_{i+1}, k) / Z^fix(beta_i, k)) for every stage, by enumeration."""
    logs = np.array([fixed_partition_vector(graph, b, cap).log_value(k) for b in schedule.betas])
    return np.diff(logs)


def chebyshev_ratios(graph: Graph, schedule: CoolingSchedule, k: int, cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    """Z^fix(2 beta_{i+1} - beta_i) Z^fix(beta_i) / Z^fix(beta_{i+1})^2 per stage; the schedule is e^{Delta/2}-Chebyshev when all are <= e^{Delta/2}."""
    ratios = []
    for beta_i, beta_next in schedule.pairs():
        log_far = fixed_partition_vector(graph, 2.0 * beta_next - beta_i, cap).log_value(k)
        log_here = fixed_partition_vector(graph, beta_i, cap).log_value(k)
        log_next = fixed_partition_vector(graph, beta_next, cap).log_value(k)
        ratios.append(math.exp(log_far + log_here - 2.0 * log_next))
    return np.array(ratios)


def stages_frame(estimate: AnnealingEstimate) -> pd.DataFrame:
    columns = ["stage", "beta", "beta_next", "samples", "mean", "variance", "max_term"]
    return pd.DataFrame([stage.model_dump() for stage in estimate.stages], columns=columns)


def make_nu_sampler(
    kind: NuKind,
    graph: Graph,
    sweeps: int = 200,
    jobs: int = 1,
    cap: int = DEFAULT_ENUMERATION_CAP,
    sample_k: Optional[SampleKConfig] = None,
) -> NuSampler:
    kind = NuKind(kind)
    if kind == NuKind.EXACT:
        return ExactNuSampler(graph, cap)
    if kind == NuKind.SAMPLE_K:
        if sample_k is None:
            raise InvalidInputError("the sample_k backend needs a Sample-k configuration")
        return SampleKNuSampler(graph, sample_k, jobs=jobs, cap=cap)
    variant = KawasakiVariant.LOCAL if kind == NuKind.KAWASAKI_LOCAL else KawasakiVariant.GLOBAL
    return KawasakiNuSampler(graph, variant, sweeps, jobs)
