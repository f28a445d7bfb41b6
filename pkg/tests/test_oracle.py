import math

import numpy as np
import pytest

from src.ising_lab.core.generators import empty_graph, path_graph
from src.ising_lab.core.models import FixedMagParams, IsingParams, SpinConfig
from src.ising_lab.core.spins import gibbs_weight
from src.ising_lab.errors import CapacityError, InvalidInputError
from src.ising_lab.oracle.clt import clt_deviation
from src.ising_lab.oracle.distributions import exact_distribution, exact_fixed_distribution, exact_sample
from src.ising_lab.oracle.enumeration import density_of_states, popcount, state_table
from src.ising_lab.oracle.partition import (
    fixed_partition_vector,
    lambda_for_mean,
    log_fixed_partition,
    magnetization_derivative,
    mean_magnetization,
    mean_plus_count,
    partition_function,
    plus_count_pmf,
    variance_of_X,
)


def test_k2_partition_values(k2):
    assert math.exp(partition_function(k2, IsingParams(beta=0.0, lam=1.0))) == pytest.approx(4.0)
    assert math.exp(log_fixed_partition(k2, 1.0, 0)) == pytest.approx(2.0 * math.exp(-0.5))
    assert math.exp(log_fixed_partition(k2, 1.0, 2)) == pytest.approx(math.exp(0.5))


def test_partition_matches_direct_sum(triangle):
    params = IsingParams(beta=0.7, lam=1.3)
    direct = sum(gibbs_weight(triangle, SpinConfig.from_index(i, 3), params) for i in range(8))
    assert math.exp(partition_function(triangle, params)) == pytest.approx(direct, rel=1e-12)


@pytest.mark.parametrize("lam", [1.0, 1.3, 2.0, 4.0])
def test_coefficient_identity(random_graphs, lam):
    for graph in random_graphs:
        vector = fixed_partition_vector(graph, 0.9)
        log_z = partition_function(graph, IsingParams(beta=0.9, lam=lam))
        assert vector.log_evaluate(lam) == pytest.approx(log_z, rel=1e-12)


def test_zero_temperature_counts_are_binomial(random_graphs):
    for graph in random_graphs:
        vector = fixed_partition_vector(graph, 0.0)
        for plus in range(graph.n + 1):
            k = 2 * plus - graph.n
            assert round(vector.value(k)) == math.comb(graph.n, plus)


def test_enumeration_cap():
    with pytest.raises(CapacityError, match="enumeration cap"):
        partition_function(path_graph(6), IsingParams(beta=1.0, lam=1.0), cap=5)


def test_single_vertex_magnetization():
    graph = empty_graph(1)
    lam = 1.7
    params = IsingParams(beta=0.3, lam=lam)
    assert mean_magnetization(graph, params) == pytest.approx((lam ** 2 - 1) / (lam ** 2 + 1))
    assert magnetization_derivative(graph, params) == pytest.approx(4 * lam / (lam ** 2 + 1) ** 2)


def test_zero_field_magnetization_vanishes(triangle):
    assert mean_magnetization(triangle, IsingParams(beta=2.0, lam=1.0)) == 0.0


def test_derivative_matches_finite_difference(random_graphs):
    step = 1e-5
    for graph in random_graphs:
        for lam in (1.2, 2.5):
            up = mean_magnetization(graph, IsingParams(beta=0.8, lam=lam + step))
            down = mean_magnetization(graph, IsingParams(beta=0.8, lam=lam - step))
            numeric = (up - down) / (2 * step)
            assert magnetization_derivative(graph, IsingParams(beta=0.8, lam=lam)) == pytest.approx(numeric, rel=1e-6)


def test_pmf_is_a_distribution(random_graphs):
    for graph in random_graphs:
        pmf = plus_count_pmf(graph, IsingParams(beta=1.1, lam=1.5))
        assert pmf.shape == (graph.n + 1,)
        assert pmf.sum() == pytest.approx(1.0)
        assert np.all(pmf > 0)


def test_lambda_for_mean_inverts_mean():
    graph = path_graph(6)
    lam = lambda_for_mean(graph, 0.5, 4.0)
    assert mean_plus_count(graph, IsingParams(beta=0.5, lam=lam)) == pytest.approx(4.0, abs=1e-9)
    with pytest.raises(InvalidInputError):
        lambda_for_mean(graph, 0.5, 6.0)


def test_fixed_distribution_support(triangle):
    law = exact_fixed_distribution(triangle, FixedMagParams(beta=1.0, k=1))
    assert len(law.indices) == 3
    assert law.probs == pytest.approx(np.full(3, 1 / 3))


def test_exact_sample_is_seeded(triangle):
    params = IsingParams(beta=1.0, lam=1.5)
    assert exact_sample(triangle, params, seed=3, size=5) == exact_sample(triangle, params, seed=3, size=5)


def test_tv_to_samples():
    law = exact_distribution(empty_graph(1), IsingParams(beta=0.0, lam=1.0))
    assert law.tv_to_samples(np.array([0, 1, 0, 1])) == pytest.approx(0.0)
    assert law.tv_to_samples(np.array([1, 1])) == pytest.approx(0.5)
    assert law.tv_to_samples(np.array([], dtype=np.int64)) == 1.0


def test_local_clt_deviation_shrinks_on_paths():
    params = IsingParams(beta=0.8, lam=1.5)
    short = clt_deviation(path_graph(12), params)
    long = clt_deviation(path_graph(20), params)
    assert long < short


@pytest.mark.parametrize("lam", [1.3, 2.0, 5.0])
def test_partition_is_symmetric_under_inverse_activity(random_graphs, lam):
    for graph in random_graphs:
        forward = partition_function(graph, IsingParams(beta=1.2, lam=lam))
        backward = partition_function(graph, IsingParams(beta=1.2, lam=1.0 / lam))
        assert forward == pytest.approx(backward, rel=1e-12)


def test_fixed_partition_is_symmetric_in_k(random_graphs):
    for graph in random_graphs:
        vector = fixed_partition_vector(graph, 1.4)
        for plus in range(graph.n + 1):
            k = 2 * plus - graph.n
            assert vector.log_value(k) == pytest.approx(vector.log_value(-k), rel=1e-12)


def test_global_flip_inverts_activity(triangle):
    params = IsingParams(beta=0.9, lam=1.7)
    inverse = IsingParams(beta=0.9, lam=1.0 / 1.7)
    for index in range(8):
        config = SpinConfig.from_index(index, 3)
        assert gibbs_weight(triangle, config.flipped(), params) == pytest.approx(gibbs_weight(triangle, config, inverse))


@pytest.mark.parametrize("k", [-2, 0, 2])
def test_fixed_law_is_grand_law_conditioned_on_magnetization(random_graphs, k):
    for graph in random_graphs:
        if abs(k) > graph.n or (k - graph.n) % 2:
            continue
        fixed = exact_fixed_distribution(graph, FixedMagParams(beta=1.1, k=k))
        grand = exact_distribution(graph, IsingParams(beta=1.1, lam=1.6))
        mask = 2 * popcount(grand.indices) - graph.n == k
        np.testing.assert_array_equal(fixed.indices, grand.indices[mask])
        np.testing.assert_allclose(fixed.probs, grand.probs[mask] / grand.probs[mask].sum(), rtol=1e-10)


def test_mean_plus_count_increases_with_lambda(random_graphs):
    grid = np.linspace(0.2, 6.0, 25)
    for graph in random_graphs:
        means = [mean_plus_count(graph, IsingParams(beta=1.3, lam=float(lam))) for lam in grid]
        assert np.all(np.diff(means) > 0)


def test_variance_of_free_spins():
    assert variance_of_X(empty_graph(6), IsingParams(beta=0.0, lam=1.0)) == pytest.approx(1.5)
    assert variance_of_X(empty_graph(6), IsingParams(beta=2.0, lam=1.0)) == pytest.approx(1.5)


@pytest.mark.parametrize("beta", [0.0, 1.0, 3.0])
def test_variance_of_single_edge(k2, beta):
    # X is 0 or 2 with weight e^(beta/2) each, 1 with weight 2 e^(-beta/2)
    expected = 1.0 / (1.0 + math.exp(-beta))
    assert variance_of_X(k2, IsingParams(beta=beta, lam=1.0)) == pytest.approx(expected)


def test_density_of_states_matches_state_table(random_graphs):
    for graph in random_graphs:
        table = state_table(graph)
        streamed = density_of_states(graph, chunk_bits=3)
        for plus in range(graph.n + 1):
            cuts = table.cuts[table.plus_counts == plus]
            expected = np.bincount(cuts, minlength=graph.num_edges + 1)
            np.testing.assert_array_equal(streamed.counts[plus], expected)
