import numpy as np
import pytest

from src.ising_lab.chains.kernels import ChainKind
from src.ising_lab.chains.runner import ChainSpec
from src.ising_lab.errors import InvalidInputError
from src.ising_lab.hardness.experiments import phase_experiment
from src.ising_lab.hardness.gadget import GadgetOverrides, GadgetSpec, build_gadget, load_gadget, save_gadget
from src.ising_lab.hardness.phases import phase
from src.ising_lab.utils.rng import make_rng


def test_toy_spec_resolves(toy_gadget_spec):
    params = toy_gadget_spec.resolve()
    assert (params.m, params.m_prime, params.tree_depth, params.match_size) == (2, 2, 0, 1)
    assert params.n_G == 6


def test_derived_parameters_at_n_1024():
    params = GadgetSpec(delta=3, n=1024, theta=0.1, psi=0.1).resolve()
    assert params.m == 2
    assert params.tree_depth == 1
    assert params.m_prime == 4
    assert params.match_size == 1
    assert params.n_G == 2060


def test_small_n_without_overrides_is_degenerate():
    with pytest.raises(InvalidInputError, match="degenerate"):
        GadgetSpec(delta=3, n=4).resolve()


def test_inconsistent_overrides_rejected():
    spec = GadgetSpec(delta=3, n=1, overrides=GadgetOverrides(m=2, m_prime=3, tree_depth=0, match_size=1))
    with pytest.raises(InvalidInputError, match="m'"):
        spec.resolve()


def test_toy_gadget_structure(toy_gadget_spec):
    gadget = build_gadget(toy_gadget_spec, seed=3)
    assert gadget.graph.n == 6
    assert gadget.graph.num_edges == 7
    assert gadget.degree_census() == {2: 4, 3: 2}
    assert len(gadget.u0) == 2
    assert set(gadget.terminals) == set(gadget.w0)
    assert gadget.u1 in gadget.u0
    assert gadget.u1 in gadget.side_left


def test_tree_roots_are_the_only_short_vertices():
    spec = GadgetSpec(delta=3, n=1024, theta=0.1, psi=0.1, max_matching_attempts=1000)
    gadget = build_gadget(spec, seed=11)
    params = gadget.params
    assert gadget.graph.n == params.n_G
    assert gadget.degree_census() == {2: 2 * params.m, 3: params.n_G - 2 * params.m}
    degrees = np.asarray(gadget.graph.degrees)
    assert set(np.flatnonzero(degrees == 2).tolist()) == set(gadget.terminals)
    assert len(gadget.w0) == 2 * params.m_prime


def test_same_seed_same_gadget(toy_gadget_spec):
    first = build_gadget(toy_gadget_spec, seed=make_rng(5, 0))
    second = build_gadget(toy_gadget_spec, seed=make_rng(5, 0))
    assert first.graph.edges == second.graph.edges
    assert first.terminals == second.terminals


def test_gadget_file_round_trip(tmp_path, toy_gadget_spec):
    gadget = build_gadget(toy_gadget_spec, seed=1)
    path = tmp_path / "gadget.json"
    save_gadget(gadget, path)
    loaded = load_gadget(path)
    assert loaded == gadget


def test_missing_gadget_file(tmp_path):
    with pytest.raises(InvalidInputError, match="not found"):
        load_gadget(tmp_path / "absent.json")


def test_phase_of_uniform_configs(toy_gadget_spec):
    gadget = build_gadget(toy_gadget_spec, seed=2)
    assert phase(gadget, np.ones(6, dtype=np.int8)) == 1
    assert phase(gadget, -np.ones(6, dtype=np.int8)) == -1


def test_phase_tie_follows_u1(toy_gadget_spec):
    gadget = build_gadget(toy_gadget_spec, seed=2)
    spins = np.ones(6, dtype=np.int8)
    spins[gadget.u1] = -1
    # the other U0 vertex stays +, so the U0 sum is zero
    assert phase(gadget, spins) == -1
    spins = -spins
    assert phase(gadget, spins) == 1


def test_phase_is_antisymmetric(toy_gadget_spec):
    gadget = build_gadget(toy_gadget_spec, seed=4)
    rng = make_rng(8)
    for _ in range(50):
        spins = rng.choice(np.array([-1, 1], dtype=np.int8), size=6)
        assert phase(gadget, -spins) == -phase(gadget, spins)


def test_phase_length_checked(toy_gadget_spec):
    gadget = build_gadget(toy_gadget_spec, seed=0)
    with pytest.raises(InvalidInputError):
        phase(gadget, np.ones(5, dtype=np.int8))


def test_exact_phase_experiment_is_balanced(toy_gadget_spec):
    gadget = build_gadget(toy_gadget_spec, seed=6)
    report = phase_experiment(gadget, 2.0, ChainSpec(kind=ChainKind.EXACT, seed=21), runs=400)
    assert report.runs == 400
    assert len(report.labels) == 400
    assert 0.40 <= report.plus_frequency <= 0.60
    assert report.q is not None
    assert 0.0 <= report.terminal_agreement <= 1.0


def test_phase_experiment_rejects_kawasaki(toy_gadget_spec):
    gadget = build_gadget(toy_gadget_spec, seed=6)
    with pytest.raises(InvalidInputError):
        phase_experiment(gadget, 2.0, ChainSpec(kind=ChainKind.KAWASAKI_LOCAL, steps=1), runs=4)


@pytest.mark.slow
def test_glauber_phase_experiment(toy_gadget_spec):
    gadget = build_gadget(toy_gadget_spec, seed=6)
    spec = ChainSpec(kind=ChainKind.GLAUBER, steps=50, burn_in=20, seed=13)
    report = phase_experiment(gadget, 2.0, spec, runs=300, jobs=2)
    assert 0.35 <= report.plus_frequency <= 0.65
    assert len(report.magnetizations) == 300
