import numpy as np
import pytest

from src.ising_lab.chains.kernels import ChainKind, KawasakiVariant, glauber_step, heat_bath_plus_probability, kawasaki_step, sw_ghost_step
from src.ising_lab.chains.runner import (
    ChainSpec,
    chain_trace,
    empirical_tv,
    independent_finals,
    mixing_profile,
    run_chain,
    traced_run,
)
from src.ising_lab.core.generators import cycle_graph, path_graph
from src.ising_lab.core.models import FixedMagParams, IsingParams, SpinConfig
from src.ising_lab.errors import InvalidInputError
from src.ising_lab.utils.rng import make_rng


def test_heat_bath_probability():
    assert heat_bath_plus_probability(0, 1.0, 0.0) == pytest.approx(0.5)
    assert heat_bath_plus_probability(2, 1.0, 0.0) > 0.5
    assert heat_bath_plus_probability(0, 0.0, np.log(2.0)) == pytest.approx(0.8)


@pytest.mark.parametrize("variant", list(KawasakiVariant))
def test_kawasaki_conserves_magnetization(variant):
    graph = cycle_graph(8, delta_cap=3)
    config = SpinConfig.first_plus(8, 2)
    rng = make_rng(3)
    for _ in range(200):
        config = kawasaki_step(graph, config, 1.2, variant, rng)
        assert config.magnetization == 2


@pytest.mark.parametrize("kind", [ChainKind.KAWASAKI_LOCAL, ChainKind.KAWASAKI_GLOBAL])
def test_kawasaki_trace_has_constant_magnetization(kind):
    graph = path_graph(7, delta_cap=3)
    trace = chain_trace(graph, ChainSpec(kind=kind, steps=30, burn_in=5, seed=1), FixedMagParams(beta=1.0, k=-1))
    assert list(trace.columns) == ["step", "M", "delta_sigma"]
    assert len(trace) == 36
    assert (trace["M"] == -1).all()
    assert trace["delta_sigma"].abs().max() <= graph.num_edges


@pytest.mark.parametrize("kind", [ChainKind.KAWASAKI_LOCAL, ChainKind.KAWASAKI_GLOBAL])
def test_traced_run_ends_where_run_chain_does(kind):
    graph = cycle_graph(8, delta_cap=3)
    spec = ChainSpec(kind=kind, steps=12, burn_in=3, seed=21)
    params = FixedMagParams(beta=1.5, k=2)
    final, trace = traced_run(graph, spec, params)
    assert final == run_chain(graph, spec, params)
    assert trace["M"].iloc[-1] == final.magnetization
    assert len(trace) == spec.total_sweeps + 1


def test_single_steps_return_valid_configs(triangle):
    rng = make_rng(0)
    params = IsingParams(beta=1.0, lam=1.5)
    config = SpinConfig.all_plus(3)
    assert glauber_step(triangle, config, params, rng).n == 3
    assert sw_ghost_step(triangle, config, params, rng).n == 3
    with pytest.raises(InvalidInputError):
        sw_ghost_step(triangle, config, IsingParams(beta=1.0, lam=0.5), rng)


def test_run_chain_is_seeded():
    graph = cycle_graph(6, delta_cap=3)
    spec = ChainSpec(kind=ChainKind.GLAUBER, steps=20, burn_in=5, seed=42)
    params = IsingParams(beta=0.8, lam=1.2)
    assert run_chain(graph, spec, params) == run_chain(graph, spec, params)


def test_chain_parameter_pairing():
    graph = path_graph(4)
    with pytest.raises(InvalidInputError, match="fixed-magnetization"):
        run_chain(graph, ChainSpec(kind=ChainKind.KAWASAKI_LOCAL, steps=1), IsingParams(beta=1.0, lam=1.0))
    with pytest.raises(InvalidInputError, match="grand-canonical"):
        run_chain(graph, ChainSpec(kind=ChainKind.GLAUBER, steps=1), FixedMagParams(beta=1.0, k=0))
    with pytest.raises(InvalidInputError, match="initial config"):
        run_chain(graph, ChainSpec(kind=ChainKind.KAWASAKI_GLOBAL, steps=1), FixedMagParams(beta=1.0, k=0),
                  initial=SpinConfig.all_plus(4))


def test_exact_kind_draws_from_the_law(triangle):
    config = run_chain(triangle, ChainSpec(kind=ChainKind.EXACT, seed=9), FixedMagParams(beta=1.0, k=1))
    assert config.magnetization == 1


def test_independent_finals_do_not_depend_on_jobs():
    graph = path_graph(5)
    spec = ChainSpec(kind=ChainKind.GLAUBER, steps=10, seed=7)
    params = IsingParams(beta=0.5, lam=1.0)
    serial = independent_finals(graph, spec, params, 6, jobs=1)
    pooled = independent_finals(graph, spec, params, 6, jobs=2)
    np.testing.assert_array_equal(serial, pooled)


@pytest.mark.parametrize("kind", [ChainKind.GLAUBER, ChainKind.SW_GHOST])
def test_grand_canonical_chains_reach_the_law(kind):
    graph = path_graph(4, delta_cap=3)
    spec = ChainSpec(kind=kind, steps=30, seed=12)
    tv = empirical_tv(graph, spec, IsingParams(beta=1.0, lam=1.3), samples=4000)
    assert tv < 0.06


def test_kawasaki_reaches_the_fixed_law():
    graph = cycle_graph(6, delta_cap=3)
    spec = ChainSpec(kind=ChainKind.KAWASAKI_GLOBAL, steps=30, seed=4)
    tv = empirical_tv(graph, spec, FixedMagParams(beta=1.0, k=0), samples=4000)
    assert tv < 0.06


def test_trajectory_tv():
    graph = path_graph(3, delta_cap=3)
    spec = ChainSpec(kind=ChainKind.GLAUBER, burn_in=20, seed=5)
    assert empirical_tv(graph, spec, IsingParams(beta=0.5, lam=1.0), samples=20000, trajectory=True) < 0.05


def test_zero_samples_report_full_distance(triangle):
    spec = ChainSpec(kind=ChainKind.GLAUBER, steps=1)
    assert empirical_tv(triangle, spec, IsingParams(beta=1.0, lam=1.0), samples=0) == 1.0


def test_mixing_profile_columns():
    graph = path_graph(3)
    frame = mixing_profile(graph, ChainSpec(kind=ChainKind.GLAUBER, seed=2), IsingParams(beta=0.5, lam=1.0), [0, 10], 500)
    assert list(frame.columns) == ["sweeps", "tv"]
    assert frame["sweeps"].tolist() == [0, 10]
    # all runs still sit at the all-plus start after zero sweeps
    assert frame["tv"].iloc[0] > frame["tv"].iloc[1]
