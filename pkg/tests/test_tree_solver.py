import math

import pytest

from src.ising_lab.errors import InvalidInputError, RegimeError
from src.ising_lab.tree.solver import (
    beta_critical,
    edge_message,
    eta_c,
    eta_plus,
    lambda_for_eta,
    solve_tree,
    tree_map,
    tree_marginal_q,
    tree_recursion_eta,
)


def test_beta_critical_delta_three():
    assert beta_critical(3) == pytest.approx(math.log(3), abs=1e-12)
    assert beta_critical(4) == pytest.approx(math.log(2), abs=1e-12)


def test_delta_below_three_rejected():
    with pytest.raises(InvalidInputError):
        beta_critical(2)
    with pytest.raises(InvalidInputError):
        solve_tree(2, 1.0, 1.0)


@pytest.mark.parametrize("beta", [0.3, 0.7, 1.05])
def test_no_spontaneous_magnetization_below_beta_c(beta):
    assert eta_plus(3, beta, 1.0) <= 1e-9


@pytest.mark.parametrize("beta", [1.2, 1.5, 2.0])
def test_spontaneous_magnetization_above_beta_c(beta):
    solution = solve_tree(3, beta, 1.0)
    assert solution.eta_plus >= 1e-3
    assert solution.residual <= 1e-12


def test_free_spins_closed_form():
    assert eta_plus(3, 0.0, 2.0) == pytest.approx(0.6)


def test_fixed_point_is_a_fixed_point():
    solution = solve_tree(4, 1.3, 1.7)
    assert tree_map(solution.L_star, 4, 1.3, 1.7) == pytest.approx(solution.L_star, abs=1e-12)


def test_edge_message_limits():
    assert edge_message(math.inf, 2.0) == 1.0
    assert edge_message(-math.inf, 2.0) == -1.0
    assert edge_message(0.0, 2.0) == 0.0


def test_matches_deep_finite_tree():
    assert tree_recursion_eta(3, 2.0, 1.0, 60) == pytest.approx(eta_plus(3, 2.0, 1.0), abs=1e-6)
    assert tree_recursion_eta(3, 2.0, 1.0, 0) == 1.0


def test_finite_tree_decreases_with_depth():
    depths = [tree_recursion_eta(3, 1.5, 1.0, d) for d in (1, 5, 20)]
    assert depths[0] > depths[1] > depths[2]


def test_eta_plus_increases_with_lambda():
    values = [eta_plus(3, 1.5, lam) for lam in (1.0, 1.5, 3.0)]
    assert values == sorted(values)
    assert values[0] < values[-1]


def test_eta_c_below_threshold():
    assert eta_c(3, 0.5) == 0.0
    with pytest.raises(RegimeError):
        eta_c(3, 0.5, strict=True)


def test_lambda_for_eta_round_trip():
    lam = lambda_for_eta(3, 2.0, 0.995)
    assert lam > 1.0
    assert eta_plus(3, 2.0, lam) == pytest.approx(0.995, abs=1e-9)


def test_lambda_for_eta_below_zero_field_value():
    with pytest.raises(InvalidInputError):
        lambda_for_eta(3, 2.0, eta_c(3, 2.0) / 2)


@pytest.mark.parametrize("beta", [1.2, 1.5, 2.0, 3.0])
def test_tree_marginal_q_lies_between_half_and_alpha(beta):
    alpha = 0.5 * (1.0 + eta_c(3, beta))
    q = tree_marginal_q(3, beta)
    assert 0.5 < q < alpha


def test_tree_marginal_q_needs_supercritical_beta():
    with pytest.raises(RegimeError):
        tree_marginal_q(3, 1.0)


@pytest.mark.parametrize("beta", [1.2, 1.5, 3.0])
@pytest.mark.parametrize("lam", [1.0, 1.5, 4.0])
def test_supercritical_fixed_point_is_refined(beta, lam):
    solution = solve_tree(3, beta, lam)
    assert solution.residual <= 1e-12
    assert solution.L_star > 0.0


def test_lambda_for_eta_honours_tolerance():
    base = eta_c(3, 2.0)
    assert lambda_for_eta(3, 2.0, base + 1e-7, tolerance=1e-6) == 1.0
    assert lambda_for_eta(3, 2.0, base + 1e-7, tolerance=1e-10) > 1.0


def test_near_critical_flag():
    assert solve_tree(3, math.log(3) + 1e-8, 1.0).low_precision
    assert not solve_tree(3, 2.0, 1.0).low_precision


def test_record_uses_lambda_key():
    record = solve_tree(3, 1.5, 1.0).to_record()
    assert record["lambda"] == 1.0
    assert record["beta_c"] == pytest.approx(math.log(3))
