"""Seeded chain runs, empirical TV diagnostics and trajectory dumps."""
import logging
from functools import partial
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from src.ising_lab.chains.kernels import ChainKind, ChainState
from src.ising_lab.core.models import FixedMagParams, Graph, IsingParams, SpinConfig
from src.ising_lab.errors import InvalidInputError
from src.ising_lab.oracle.distributions import exact_sample, law_of
from src.ising_lab.oracle.enumeration import DEFAULT_ENUMERATION_CAP, ensure_enumerable, spins_to_indices
from src.ising_lab.utils.parallel import parallel_map
from src.ising_lab.utils.rng import SEED_LIMIT, make_rng

logger = logging.getLogger(__name__)

Params = Union[IsingParams, FixedMagParams]


class ChainSpec(BaseModel):
    """
    Which chain to run and for how long. ``steps`` and ``burn_in`` count sweeps:
    n single-site updates, or one cluster update for sw_ghost.

    Run i of a batch draws from substream (seed, i); a single run uses the bare seed.
    """
    model_config = ConfigDict(frozen=True)

    kind: ChainKind = ChainKind.GLAUBER
    steps: int = Field(default=0, ge=0)
    seed: int = Field(default=0, ge=0, lt=SEED_LIMIT)
    burn_in: int = Field(default=0, ge=0)

    @property
    def total_sweeps(self) -> int:
        return self.burn_in + self.steps


def default_initial(graph: Graph, params: Params) -> SpinConfig:
    """All-plus for grand-canonical chains; the first (k + n)/2 vertices + for fixed magnetization."""
    if isinstance(params, FixedMagParams):
        return SpinConfig.first_plus(graph.n, params.k)
    return SpinConfig.all_plus(graph.n)


def _check_pairing(graph: Graph, kind: ChainKind, params: Params, initial: Optional[SpinConfig]) -> None:
    if kind.conserves_magnetization and not isinstance(params, FixedMagParams):
        raise InvalidInputError(f"{kind.value} needs fixed-magnetization parameters (beta, k)")
    if kind in (ChainKind.GLAUBER, ChainKind.SW_GHOST) and not isinstance(params, IsingParams):
        raise InvalidInputError(f"{kind.value} needs grand-canonical parameters (beta, lambda)")
    if kind == ChainKind.SW_GHOST and params.lam < 1.0:
        raise InvalidInputError("sw_ghost needs lambda >= 1")
    if isinstance(params, FixedMagParams):
        params.plus_count(graph.n)
        if initial is not None and initial.magnetization != params.k:
            raise InvalidInputError(f"initial config has magnetization {initial.magnetization}, expected {params.k}")
    if initial is not None and initial.n != graph.n:
        raise InvalidInputError(f"initial config has {initial.n} spins but the graph has {graph.n} vertices")


def _field_terms(params: Params):
    if isinstance(params, FixedMagParams):
        return params.beta, 0.0
    return params.beta, params.log_lambda


def run_sweeps(
    graph: Graph,
    kind: ChainKind,
    params: Params,
    initial: np.ndarray,
    sweeps: int,
    rng: np.random.Generator,
) -> np.ndarray:
    beta, log_lam = _field_terms(params)
    state = ChainState(graph, initial)
    for _ in range(sweeps):
        state.sweep(kind, beta, log_lam, rng)
    return state.spins


def run_chain(
    graph: Graph,
    spec: ChainSpec,
    params: Params,
    initial: Optional[SpinConfig] = None,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> SpinConfig:
    """Final configuration after burn_in + steps sweeps; exact kind draws one exact sample."""
    if spec.kind == ChainKind.EXACT:
        return exact_sample(graph, params, make_rng(spec.seed), cap=cap)
    _check_pairing(graph, spec.kind, params, initial)
    start = initial if initial is not None else default_initial(graph, params)
    spins = run_sweeps(graph, spec.kind, params, start.as_array(), spec.total_sweeps, make_rng(spec.seed))
    return SpinConfig.from_array(spins)


def _independent_run(index: int, graph: Graph, spec: ChainSpec, params: Params, initial: np.ndarray) -> np.ndarray:
    return run_sweeps(graph, spec.kind, params, initial, spec.total_sweeps, make_rng(spec.seed, index))


def independent_finals(
    graph: Graph,
    spec: ChainSpec,
    params: Params,
    count: int,
    initial: Optional[SpinConfig] = None,
    jobs: int = 1,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> np.ndarray:
    """(count, n) array of final states of independent runs on substreams (seed, 0..count-1)."""
    if spec.kind == ChainKind.EXACT:
        return law_of(graph, params, cap).sample_spins(make_rng(spec.seed), count)
    _check_pairing(graph, spec.kind, params, initial)
    start = (initial if initial is not None else default_initial(graph, params)).as_array()
    worker = partial(_independent_run, graph=graph, spec=spec, params=params, initial=start)
    finals = parallel_map(worker, range(count), jobs=jobs)
    return np.stack(finals) if finals else np.zeros((0, graph.n), dtype=np.int8)


def trajectory_states(graph: Graph, spec: ChainSpec, params: Params, count: int, initial: Optional[SpinConfig] = None) -> np.ndarray:
    """
    Encoded states visited by one chain after burn_in sweeps, recorded after each
    single update (each cluster update for sw_ghost).
    """
    _check_pairing(graph, spec.kind, params, initial)
    rng = make_rng(spec.seed)
    beta, log_lam = _field_terms(params)
    start = initial if initial is not None else default_initial(graph, params)
    state = ChainState(graph, start.as_array())
    for _ in range(spec.burn_in):
        state.sweep(spec.kind, beta, log_lam, rng)
    weights = np.left_shift(np.int64(1), np.arange(graph.n, dtype=np.int64))
    visited = np.empty(count, dtype=np.int64)
    for t in range(count):
        state.single_update(spec.kind, beta, log_lam, rng)
        visited[t] = int(np.dot(state.spins > 0, weights))
    return visited


def empirical_tv(
    graph: Graph,
    spec: ChainSpec,
    params: Params,
    samples: int,
    trajectory: bool = False,
    jobs: int = 1,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> float:
    """
    TV distance between the empirical law of ``samples`` chain outputs and the
    exact law. Outputs are final states of independent runs, or with
    ``trajectory`` the successive states of a single run.
    """
    ensure_enumerable(graph, cap)
    law = law_of(graph, params, cap)
    if samples <= 0:
        logger.warning("empirical_tv called with no samples; reporting TV = 1")
        return 1.0
    if trajectory and spec.kind != ChainKind.EXACT:
        indices = trajectory_states(graph, spec, params, samples)
    else:
        indices = spins_to_indices(independent_finals(graph, spec, params, samples, jobs=jobs, cap=cap))
    tv = law.tv_to_samples(indices)
    logger.debug("empirical TV of %s over %d samples: %.4f", spec.kind.value, samples, tv)
    return tv


def traced_run(
    graph: Graph,
    spec: ChainSpec,
    params: Params,
    initial: Optional[SpinConfig] = None,
) -> Tuple[SpinConfig, pd.DataFrame]:
    """
    Final configuration and the per-sweep trace of the same run. Uses the same
    stream as run_chain, so the final state equals run_chain's for equal inputs.
    """
    _check_pairing(graph, spec.kind, params, initial)
    rng = make_rng(spec.seed)
    beta, log_lam = _field_terms(params)
    start = initial if initial is not None else default_initial(graph, params)
    state = ChainState(graph, start.as_array())
    rows = [(0, state.magnetization, state.interaction_sum)]
    for step in range(1, spec.total_sweeps + 1):
        state.sweep(spec.kind, beta, log_lam, rng)
        rows.append((step, state.magnetization, state.interaction_sum))
    return SpinConfig.from_array(state.spins), pd.DataFrame(rows, columns=["step", "M", "delta_sigma"])


def chain_trace(graph: Graph, spec: ChainSpec, params: Params, initial: Optional[SpinConfig] = None) -> pd.DataFrame:
    """One row per sweep (including burn-in): step, M, delta_sigma."""
    return traced_run(graph, spec, params, initial)[1]


def mixing_profile(
    graph: Graph,
    spec: ChainSpec,
    params: Params,
    sweep_grid: Sequence[int],
    samples: int,
    jobs: int = 1,
) -> pd.DataFrame:
    """Empirical TV to the exact law after t sweeps from the default start, for each t in the grid."""
    rows = []
    for sweeps in sweep_grid:
        point = spec.model_copy(update={"steps": int(sweeps), "burn_in": 0})
        rows.append((int(sweeps), empirical_tv(graph, point, params, samples, jobs=jobs)))
    return pd.DataFrame(rows, columns=["sweeps", "tv"])
