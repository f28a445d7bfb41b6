"""
Subcommand handlers. Each takes the parsed arguments and the composed config and
returns a CommandOutput; main.py owns logging, timing, manifests and exit codes.
"""
import argparse
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional

import numpy as np
import pandas as pd
from omegaconf import DictConfig

from src.ising_lab.chains.kernels import ChainKind, KawasakiVariant
from src.ising_lab.chains.runner import ChainSpec, mixing_profile, traced_run
from src.ising_lab.chains.transition import transition_matrix
from src.ising_lab.core.generators import GENERATORS, random_bounded_degree_graph, random_regular_graph
from src.ising_lab.core.graph_io import graph_to_dict, load_graph, save_graph
from src.ising_lab.core.models import FixedMagParams, Graph, IsingParams, check_magnetization
from src.ising_lab.counting.annealing import (
    NuKind,
    build_schedule,
    chebyshev_ratios,
    count_fixed,
    exact_stage_ratios,
    log_binomial,
    make_nu_sampler,
    stages_frame,
)
from src.ising_lab.errors import InvalidInputError
from src.ising_lab.hardness.bisection import brute_force_mebc, recover_cut_interval, theta_gamma
from src.ising_lab.hardness.experiments import phase_experiment
from src.ising_lab.hardness.gadget import GadgetOverrides, GadgetSpec, build_gadget, gadget_to_dict, save_gadget
from src.ising_lab.hardness.reduction import build_reduction, fixed_log_partition, free_log_partition, save_instance
from src.ising_lab.oracle.clt import clt_deviation
from src.ising_lab.oracle.extremal import extremal_scan
from src.ising_lab.oracle.gks import gks_check
from src.ising_lab.oracle.partition import (
    fixed_partition_vector,
    mean_magnetization,
    partition_function,
    variance_of_X,
)
from src.ising_lab.sampling.sample_k import SampleKConfig, activity_grid, grid_gap, lambda_bounds, run_sample_k, target_k
from src.ising_lab.tree.solver import beta_critical, eta_c, solve_tree, tree_marginal_q, tree_recursion_eta
from src.ising_lab.utils.rng import child_seed, make_rng

logger = logging.getLogger(__name__)

_EXP_LIMIT = 700.0


@dataclass
class CommandOutput:
    result: Dict[str, Any]
    seed: Optional[int] = None
    frame: Optional[pd.DataFrame] = None
    parameters: Dict[str, Any] = field(default_factory=dict)


def _require_seed(args: argparse.Namespace) -> int:
    if args.seed is None:
        raise InvalidInputError(f"'{args.command}' is stochastic and needs --seed")
    return args.seed


def _maybe_exp(log_value: float) -> Optional[float]:
    return math.exp(log_value) if log_value < _EXP_LIMIT else None


def _delta_for(graph: Graph, requested: Optional[int]) -> int:
    return requested if requested is not None else max(3, graph.delta_cap)


def _magnetization_arg(args: argparse.Namespace, n: int) -> int:
    """--k wins; otherwise --eta is turned into target_k(n, eta)."""
    if getattr(args, "k", None) is not None:
        check_magnetization(n, args.k)
        return args.k
    if getattr(args, "eta", None) is not None:
        return target_k(n, args.eta)
    raise InvalidInputError("pass --k or --eta")


def _grand_or_fixed(args: argparse.Namespace, n: int):
    if getattr(args, "k", None) is not None:
        return FixedMagParams(beta=args.beta, k=args.k)
    return IsingParams(beta=args.beta, lam=args.lam if args.lam is not None else 1.0)


def cmd_tree(args: argparse.Namespace, cfg: DictConfig) -> CommandOutput:
    solution = solve_tree(
        args.delta, args.beta, args.lam,
        tolerance=cfg.tree.tolerance,
        max_iterations=cfg.tree.max_iterations,
        critical_window=cfg.tree.critical_window,
    )
    result = solution.to_record()
    result["eta_c"] = eta_c(args.delta, args.beta)
    if args.beta > beta_critical(args.delta):
        result["q"] = tree_marginal_q(args.delta, args.beta)
    if args.depth is not None:
        result["eta_depth"] = tree_recursion_eta(args.delta, args.beta, args.lam, args.depth)
    return CommandOutput(result=result)


def cmd_exact(args: argparse.Namespace, cfg: DictConfig) -> CommandOutput:
    graph = load_graph(args.graph)
    cap = cfg.oracle.enumeration_cap
    result: Dict[str, Any] = {"n": graph.n, "num_edges": graph.num_edges, "beta": args.beta}
    if args.k is not None:
        log_value = fixed_partition_vector(graph, args.beta, cap).log_value(args.k)
        result.update({"k": args.k, "log_Z_fix": log_value, "Z_fix": _maybe_exp(log_value)})
    else:
        lam = args.lam if args.lam is not None else 1.0
        params = IsingParams(beta=args.beta, lam=lam)
        log_z = partition_function(graph, params, cap)
        result.update({
            "lambda": lam,
            "log_Z": log_z,
            "Z": _maybe_exp(log_z),
            "mean_magnetization": mean_magnetization(graph, params, cap) if graph.n else 0.0,
            "variance_X": variance_of_X(graph, params, cap),
        })
    return CommandOutput(result=result)


def _sample_k_config(args: argparse.Namespace, cfg: DictConfig, graph: Graph, seed: int) -> SampleKConfig:
    return SampleKConfig(
        delta=_delta_for(graph, args.delta),
        beta=args.beta,
        eta=args.eta,
        epsilon=args.eps if args.eps is not None else cfg.sample_k.epsilon,
        sampler=args.sampler or cfg.sample_k.sampler,
        sampler_sweeps=cfg.sample_k.sampler_sweeps,
        C=cfg.sample_k.C,
        C_prime=cfg.sample_k.C_prime,
        seed=seed,
        batch_size=cfg.sample_k.batch_size,
        draw_chunk=cfg.sample_k.draw_chunk,
        inverse_tolerance=cfg.tree.inverse_tolerance,
    )


def cmd_sample(args: argparse.Namespace, cfg: DictConfig) -> CommandOutput:
    seed = _require_seed(args)
    graph = load_graph(args.graph)
    if args.runs == 1:
        outcome = run_sample_k(graph, _sample_k_config(args, cfg, graph, seed), jobs=args.jobs, cap=cfg.oracle.enumeration_cap)
        result = {
            "n": graph.n,
            "k": outcome.k,
            "spins": list(outcome.config.spins),
            "magnetization": outcome.config.magnetization,
            "fallback": outcome.fallback,
            "flipped": outcome.flipped,
            "lambda": outcome.lam,
            "batch_size": outcome.batch_size,
            "iterations": outcome.iterations,
            "grid_size": outcome.grid_size,
            "eps_prime": outcome.eps_prime,
            "trace": [step.model_dump() for step in outcome.trace],
        }
        frame = pd.DataFrame([step.model_dump() for step in outcome.trace],
                             columns=["iteration", "lam", "k_bar", "hit", "draws"])
        return CommandOutput(result=result, seed=seed, frame=frame)

    rows = []
    for i in range(args.runs):
        run_seed = child_seed(make_rng(seed, i))
        outcome = run_sample_k(graph, _sample_k_config(args, cfg, graph, run_seed), jobs=args.jobs,
                               cap=cfg.oracle.enumeration_cap)
        rows.append({"run": i, "magnetization": outcome.config.magnetization, "fallback": outcome.fallback,
                     "index": outcome.config.to_index(), "iterations_used": len(outcome.trace)})
    frame = pd.DataFrame(rows)
    result = {
        "n": graph.n,
        "k": target_k(graph.n, args.eta),
        "runs": args.runs,
        "fallback_rate": float(frame["fallback"].mean()),
        "magnetizations": sorted(set(frame["magnetization"].tolist())),
    }
    return CommandOutput(result=result, seed=seed, frame=frame)


def cmd_count(args: argparse.Namespace, cfg: DictConfig) -> CommandOutput:
    seed = _require_seed(args)
    graph = load_graph(args.graph)
    k = _magnetization_arg(args, graph.n)
    kind = NuKind(args.sampler or cfg.annealing.sampler)
    cap = cfg.oracle.enumeration_cap
    template = None
    if kind == NuKind.SAMPLE_K:
        schedule = build_schedule(graph.n, args.beta, args.eps, cfg.annealing.sample_constant, cfg.annealing.tv_constant)
        template = SampleKConfig(
            delta=_delta_for(graph, args.delta),
            beta=0.0,
            eta=abs(k) / graph.n,
            epsilon=schedule.sampler_tv or args.eps,
            sampler=cfg.sample_k.sampler,
            sampler_sweeps=cfg.sample_k.sampler_sweeps,
            C=cfg.sample_k.C,
            C_prime=cfg.sample_k.C_prime,
            batch_size=cfg.sample_k.batch_size,
            draw_chunk=cfg.sample_k.draw_chunk,
            inverse_tolerance=cfg.tree.inverse_tolerance,
        )
    sampler = make_nu_sampler(kind, graph, sweeps=cfg.annealing.sampler_sweeps, jobs=args.jobs, cap=cap, sample_k=template)
    estimate = count_fixed(
        graph, args.beta, k, args.eps, sampler, seed,
        amplify=args.amplify or cfg.annealing.amplify,
        sample_count=cfg.annealing.sample_count,
        sample_constant=cfg.annealing.sample_constant,
        tv_constant=cfg.annealing.tv_constant,
    )
    result: Dict[str, Any] = {
        "n": graph.n,
        "k": k,
        "beta": args.beta,
        "epsilon": args.eps,
        "sampler": kind.value,
        "log_estimate": estimate.log_value,
        "estimate": _maybe_exp(estimate.log_value),
        "log_binomial": estimate.log_binomial,
        "stages": estimate.schedule.length,
        "samples_per_stage": estimate.stages[0].samples if estimate.stages else 0,
        "run_log_values": list(estimate.run_log_values),
    }
    if args.check:
        log_exact = fixed_partition_vector(graph, args.beta, cap).log_value(k)
        result["log_exact"] = log_exact
        result["relative_error"] = math.expm1(estimate.log_value - log_exact)
    return CommandOutput(result=result, seed=seed, frame=stages_frame(estimate))


def cmd_kawasaki(args: argparse.Namespace, cfg: DictConfig) -> CommandOutput:
    seed = _require_seed(args)
    graph = load_graph(args.graph)
    k = _magnetization_arg(args, graph.n)
    variant = KawasakiVariant(args.variant or cfg.chains.variant)
    kind = ChainKind.KAWASAKI_LOCAL if variant == KawasakiVariant.LOCAL else ChainKind.KAWASAKI_GLOBAL
    spec = ChainSpec(
        kind=kind,
        steps=args.steps if args.steps is not None else cfg.chains.steps,
        burn_in=args.burn_in if args.burn_in is not None else cfg.chains.burn_in,
        seed=seed,
    )
    params = FixedMagParams(beta=args.beta, k=k)
    final, trace = traced_run(graph, spec, params)
    result = {
        "n": graph.n,
        "k": k,
        "variant": variant.value,
        "sweeps": spec.total_sweeps,
        "spins": list(final.spins),
        "magnetization": final.magnetization,
        "mean_delta_sigma": float(trace["delta_sigma"].iloc[spec.burn_in:].mean()),
    }
    return CommandOutput(result=result, seed=seed, frame=trace)


def _gadget_spec(args: argparse.Namespace, cfg: DictConfig) -> GadgetSpec:
    hardness = cfg.hardness
    overrides = GadgetOverrides(
        m=args.m if args.m is not None else hardness.overrides.m,
        m_prime=args.m_prime if args.m_prime is not None else hardness.overrides.m_prime,
        tree_depth=args.tree_depth if args.tree_depth is not None else hardness.overrides.tree_depth,
        match_size=args.match_size if args.match_size is not None else hardness.overrides.match_size,
    )
    return GadgetSpec(
        delta=args.delta,
        n=args.n,
        theta=args.theta if args.theta is not None else hardness.theta,
        psi=args.psi if args.psi is not None else hardness.psi,
        overrides=overrides,
        max_matching_attempts=hardness.max_matching_attempts,
    )


def cmd_gadget(args: argparse.Namespace, cfg: DictConfig) -> CommandOutput:
    seed = _require_seed(args)
    spec = _gadget_spec(args, cfg)
    gadget = build_gadget(spec, make_rng(seed, 0))
    if args.gadget_out:
        save_gadget(gadget, args.gadget_out)
    result: Dict[str, Any] = {
        **gadget.params.model_dump(),
        "delta": gadget.delta,
        "num_edges": gadget.graph.num_edges,
        "degree_census": {str(d): c for d, c in gadget.degree_census().items()},
        "gadget": gadget_to_dict(gadget),
    }
    frame = None
    if args.phase:
        if args.beta is None:
            raise InvalidInputError("--phase needs --beta")
        runs = args.phase_runs if args.phase_runs is not None else cfg.hardness.phase_experiment.runs
        chain = ChainSpec(
            kind=ChainKind(cfg.hardness.phase_experiment.kind),
            steps=cfg.hardness.phase_experiment.steps,
            burn_in=cfg.hardness.phase_experiment.burn_in,
            seed=child_seed(make_rng(seed, 1)),
        )
        report = phase_experiment(gadget, args.beta, chain, runs, jobs=args.jobs,
                                  cap=cfg.oracle.enumeration_cap)
        result["phase"] = report.model_dump(exclude={"labels", "magnetizations"}, mode="json")
        frame = pd.DataFrame({"run": range(report.runs), "phase": report.labels, "M": report.magnetizations})
    return CommandOutput(result=result, seed=seed, frame=frame)


def cmd_reduce(args: argparse.Namespace, cfg: DictConfig) -> CommandOutput:
    seed = _require_seed(args)
    host = load_graph(args.host)
    spec = _gadget_spec(args, cfg)
    instance = build_reduction(host, args.gamma, spec, args.eta, seed=seed, beta=args.beta)
    if args.instance_out:
        save_instance(instance, args.instance_out)
    result: Dict[str, Any] = {
        "h": instance.h,
        "gamma": str(instance.gamma),
        "h_plus": instance.h_plus,
        "h_minus": instance.h_minus,
        "M_star": instance.M_star,
        "s": instance.s,
        "N": instance.N,
        "ell": instance.ell,
        "k": instance.target_k,
        "match_size": instance.match_size,
        "crossing_edges": len(instance.crossing_edges),
        "composite_max_degree": instance.composite.max_degree,
        "b": brute_force_mebc(host, instance.gamma),
    }
    if args.oracle:
        if args.beta is None:
            raise InvalidInputError("--oracle needs --beta")
        cap = cfg.oracle.enumeration_cap
        q = tree_marginal_q(spec.delta, args.beta)
        theta, gamma_const = theta_gamma(args.beta, q)
        log_fixed = fixed_log_partition(instance, args.beta, cap)
        log_free = free_log_partition(instance, args.beta, cap)
        interval = recover_cut_interval(
            log_free, log_fixed, instance.match_size, host.num_edges, spec.n, instance.h, args.beta, q,
            cfg.hardness.C, cfg.hardness.C_prime,
        )
        result.update({
            "q": q, "Theta": theta, "Gamma": gamma_const,
            "log_Z_fix": log_fixed, "log_Z_free": log_free,
            "T": interval.center, "interval": [interval.low, interval.high],
        })
    return CommandOutput(result=result, seed=seed)


def cmd_graph(args: argparse.Namespace, cfg: DictConfig) -> CommandOutput:
    if args.kind in GENERATORS:
        graph = GENERATORS[args.kind](args.n, args.delta)
        seed = None
    elif args.kind == "random":
        seed = _require_seed(args)
        graph = random_bounded_degree_graph(args.n, args.delta or 3, make_rng(seed))
    elif args.kind == "regular":
        seed = _require_seed(args)
        graph = random_regular_graph(args.n, args.delta or 3, seed)
    else:
        raise InvalidInputError(f"unknown graph kind {args.kind!r}")
    if args.graph_out:
        save_graph(graph, args.graph_out)
    result = {**graph_to_dict(graph), "num_edges": graph.num_edges, "max_degree": graph.max_degree}
    return CommandOutput(result=result, seed=seed)


def verify_extremal(args: argparse.Namespace, cfg: DictConfig) -> CommandOutput:
    extremal = cfg.oracle.extremal
    random_n = list(extremal.random_n) if args.random else []
    report = extremal_scan(
        args.delta,
        args.nmax if args.nmax is not None else extremal.n_max,
        list(extremal.beta_grid),
        list(extremal.lambda_grid),
        random_n=random_n,
        random_graphs_per_n=extremal.random_graphs_per_n,
        seed=args.seed or 0,
    )
    frame = pd.DataFrame([r.model_dump(exclude={"worst_edges"}) for r in report.records])
    result = {
        "delta": report.delta,
        "graphs_scanned": report.graphs_scanned,
        "max_gap": report.max_gap,
        "holds": report.max_gap <= 1e-9,
        "worst": report.worst.model_dump(mode="json") if report.worst else None,
    }
    return CommandOutput(result=result, seed=args.seed, frame=frame)


def verify_gks(args: argparse.Namespace, cfg: DictConfig) -> CommandOutput:
    graph = load_graph(args.graph)
    outcome = gks_check(graph, IsingParams(beta=args.beta, lam=args.lam), args.A, args.B, tuple(args.edge),
                        cfg.oracle.enumeration_cap)
    return CommandOutput(result={**outcome._asdict(), "holds": outcome.holds()})


def verify_balance(args: argparse.Namespace, cfg: DictConfig) -> CommandOutput:
    graph = load_graph(args.graph)
    chain = transition_matrix(graph, ChainKind(args.kind), _grand_or_fixed(args, graph.n))
    result = {
        "kind": chain.kind.value,
        "states": len(chain.states),
        "reversibility_error": chain.reversibility_error(),
        "stationarity_error": chain.stationarity_error(),
        "row_sum_error": chain.row_sum_error(),
        "irreducible": chain.is_irreducible(),
    }
    return CommandOutput(result=result)


def verify_clt(args: argparse.Namespace, cfg: DictConfig) -> CommandOutput:
    graph = load_graph(args.graph)
    params = IsingParams(beta=args.beta, lam=args.lam)
    return CommandOutput(result={"n": graph.n, "deviation": clt_deviation(graph, params, cfg.oracle.enumeration_cap)})


def verify_schedule(args: argparse.Namespace, cfg: DictConfig) -> CommandOutput:
    graph = load_graph(args.graph)
    k = _magnetization_arg(args, graph.n)
    cap = cfg.oracle.enumeration_cap
    schedule = build_schedule(graph.n, args.beta)
    ratios = chebyshev_ratios(graph, schedule, k, cap)
    log_total = log_binomial(graph.n, k) + float(exact_stage_ratios(graph, schedule, k, cap).sum())
    log_exact = fixed_partition_vector(graph, args.beta, cap).log_value(k)
    bound = math.exp(0.5 * _delta_for(graph, args.delta))
    frame = pd.DataFrame({"beta": schedule.betas[:-1], "beta_next": schedule.betas[1:], "chebyshev": ratios})
    result = {
        "stages": schedule.length,
        "max_gap": schedule.max_gap,
        "max_chebyshev": float(ratios.max()) if ratios.size else 1.0,
        "bound": bound,
        "chebyshev_holds": bool(np.all(ratios <= bound)),
        "telescoping_error": abs(math.expm1(log_total - log_exact)),
    }
    return CommandOutput(result=result, frame=frame)


def verify_mixing(args: argparse.Namespace, cfg: DictConfig) -> CommandOutput:
    seed = _require_seed(args)
    graph = load_graph(args.graph)
    spec = ChainSpec(kind=ChainKind(args.kind), steps=0, burn_in=0, seed=seed)
    frame = mixing_profile(graph, spec, _grand_or_fixed(args, graph.n), args.sweeps, args.samples, jobs=args.jobs)
    result = {"kind": spec.kind.value, "samples": args.samples, "tv": dict(zip(map(str, frame["sweeps"]), frame["tv"]))}
    return CommandOutput(result=result, seed=seed, frame=frame)


def verify_grid(args: argparse.Namespace, cfg: DictConfig) -> CommandOutput:
    graph = load_graph(args.graph)
    delta = _delta_for(graph, args.delta)
    gap, lam = grid_gap(graph, delta, args.beta, args.eta, cfg.oracle.enumeration_cap)
    lam_min, lam_max = lambda_bounds(delta, args.beta, abs(args.eta))
    result = {
        "n": graph.n,
        "k": target_k(graph.n, args.eta),
        "lambda_min": lam_min,
        "lambda_max": lam_max,
        "grid_size": int(activity_grid(lam_min, lam_max, graph.n).size),
        "best_lambda": lam,
        "gap": gap,
        "holds": gap <= 1.0,
    }
    return CommandOutput(result=result)


COMMANDS: Dict[str, Callable[[argparse.Namespace, DictConfig], CommandOutput]] = {
    "tree": cmd_tree,
    "exact": cmd_exact,
    "sample": cmd_sample,
    "count": cmd_count,
    "kawasaki": cmd_kawasaki,
    "gadget": cmd_gadget,
    "reduce": cmd_reduce,
    "graph": cmd_graph,
}

VERIFY_CHECKS: Dict[str, Callable[[argparse.Namespace, DictConfig], CommandOutput]] = {
    "extremal": verify_extremal,
    "gks": verify_gks,
    "balance": verify_balance,
    "clt": verify_clt,
    "schedule": verify_schedule,
    "mixing": verify_mixing,
    "grid": verify_grid,
}
