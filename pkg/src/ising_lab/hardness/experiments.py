"""Desk-scale experiments on gadgets and reductions."""
import logging
from functools import partial
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from src.ising_lab.chains.kernels import ChainKind
from src.ising_lab.chains.runner import ChainSpec, run_sweeps
from src.ising_lab.core.models import Graph, IsingParams
from src.ising_lab.errors import InvalidInputError
from src.ising_lab.hardness.bisection import brute_force_mebc, recover_cut_interval
from src.ising_lab.hardness.gadget import Gadget, GadgetSpec, build_gadget
from src.ising_lab.hardness.phases import phase
from src.ising_lab.hardness.reduction import GammaLike, build_reduction, fixed_log_partition, free_log_partition
from src.ising_lab.oracle.distributions import exact_distribution
from src.ising_lab.oracle.enumeration import DEFAULT_ENUMERATION_CAP
from src.ising_lab.tree.solver import beta_critical, tree_marginal_q
from src.ising_lab.utils.parallel import parallel_map
from src.ising_lab.utils.rng import make_rng

logger = logging.getLogger(__name__)


class PhaseReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    runs: int
    beta: float
    kind: ChainKind
    labels: Tuple[int, ...]
    magnetizations: Tuple[int, ...]
    plus_frequency: float
    mean_M_plus: Optional[float] = None
    mean_M_minus: Optional[float] = None
    plus_positive: int = 0
    terminal_agreement: Optional[float] = None
    q: Optional[float] = None


def _phase_run(index: int, gadget: Gadget, spec: ChainSpec, params: IsingParams) -> np.ndarray:
    rng = make_rng(spec.seed, index)
    initial = rng.choice(np.array([-1, 1], dtype=np.int8), size=gadget.graph.n)
    return run_sweeps(gadget.graph, spec.kind, params, initial, spec.total_sweeps, rng)


def phase_experiment(
    gadget: Gadget,
    beta: float,
    spec: ChainSpec,
    runs: int,
    jobs: int = 1,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> PhaseReport:
    """
    Zero-field runs from uniform random starts on substreams (seed, i). Reports the
    phase of each final state, magnetization means given the phase, and how often
    terminals agree with their gadget's phase (compared with q above beta_c).
    """
    if runs < 1:
        raise InvalidInputError("phase_experiment needs at least one run")
    params = IsingParams(beta=beta, lam=1.0)
    if spec.kind == ChainKind.EXACT:
        finals = exact_distribution(gadget.graph, params, cap).sample_spins(make_rng(spec.seed), runs)
    elif spec.kind in (ChainKind.GLAUBER, ChainKind.SW_GHOST):
        worker = partial(_phase_run, gadget=gadget, spec=spec, params=params)
        finals = np.stack(parallel_map(worker, range(runs), jobs=jobs))
    else:
        raise InvalidInputError(f"{spec.kind.value} does not sample the zero-field measure")

    labels = np.array([phase(gadget, row) for row in finals], dtype=np.int64)
    magnetizations = finals.sum(axis=1, dtype=np.int64)
    plus, minus = labels == 1, labels == -1
    terminals = np.asarray(gadget.terminals, dtype=np.int64)
    agreement = float(np.mean(finals[:, terminals] == labels[:, None])) if terminals.size else None
    q = tree_marginal_q(gadget.delta, beta) if beta > beta_critical(gadget.delta) else None
    report = PhaseReport(
        runs=runs,
        beta=beta,
        kind=spec.kind,
        labels=tuple(int(v) for v in labels),
        magnetizations=tuple(int(v) for v in magnetizations),
        plus_frequency=float(plus.mean()),
        mean_M_plus=float(magnetizations[plus].mean()) if plus.any() else None,
        mean_M_minus=float(magnetizations[minus].mean()) if minus.any() else None,
        plus_positive=int(np.sum(plus & (magnetizations > 0))),
        terminal_agreement=agreement,
        q=q,
    )
    logger.info("Phase experiment: %d runs, + frequency %.3f, terminal agreement %s (q=%s)",
                runs, report.plus_frequency, agreement, q)
    return report


def reduction_experiment(
    hosts: Dict[str, Graph],
    gamma: GammaLike,
    spec: GadgetSpec,
    beta: float,
    eta: float = 0.0,
    seed: int = 0,
    C: float = 1.0,
    C_prime: float = 1.0,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> pd.DataFrame:
    """
    For each named host: exact log Z^fix of its composite, the free log Z, the
    recovered cut interval and the brute-force gamma-balanced min cut. All hosts
    share one gadget so that only the host structure varies.
    """
    gadget = build_gadget(spec, make_rng(seed, 0))
    q = tree_marginal_q(spec.delta, beta)
    rows = []
    for name, host in hosts.items():
        instance = build_reduction(host, gamma, spec, eta, seed=seed, beta=beta, gadget=gadget)
        log_fixed = fixed_log_partition(instance, beta, cap)
        log_free = free_log_partition(instance, beta, cap)
        interval = recover_cut_interval(
            log_free, log_fixed, instance.match_size, host.num_edges, spec.n, instance.h, beta, q, C, C_prime,
        )
        rows.append({
            "host": name,
            "h": instance.h,
            "host_edges": host.num_edges,
            "N": instance.N,
            "k": instance.target_k,
            "log_Z_fix": log_fixed,
            "log_Z_free": log_free,
            "T": interval.center,
            "low": interval.low,
            "high": interval.high,
            "b": brute_force_mebc(host, gamma),
        })
        logger.info("Reduction on %s: b=%d, interval [%.3f, %.3f]", name, rows[-1]["b"], interval.low, interval.high)
    return pd.DataFrame(rows)
