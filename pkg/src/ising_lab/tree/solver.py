"""
Quantities of the Ising model on the infinite Delta-regular tree.

The effective field L of a vertex in a (Delta-1)-ary subtree with all-plus
boundary solves L = log(lambda) + (Delta-1) * h1(L), where h1 is the message a
child with field L sends across an edge of coupling beta/2:

    h1(x) = artanh(tanh(x) * tanh(beta/2)) = 1/2 * log(cosh(x + beta/2) / cosh(x - beta/2))

The log-cosh form is used throughout; it stays finite when tanh(x) * tanh(beta/2)
rounds to 1.
"""
import logging
import math
from functools import lru_cache
from typing import Any, Dict

from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import brentq
from scipy.special import expit

from src.ising_lab.errors import ConvergenceError, InvalidInputError, RegimeError

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-12
DEFAULT_MAX_ITERATIONS = 100_000
DEFAULT_CRITICAL_WINDOW = 1e-6
DEFAULT_INVERSE_TOLERANCE = 1e-10
_LAMBDA_CEILING = 1e300


class TreeSolution(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    delta: int = Field(ge=3)
    beta: float = Field(ge=0.0)
    lam: float = Field(gt=0.0, alias="lambda")
    L_star: float
    eta_plus: float = Field(ge=0.0, le=1.0)
    residual: float = 0.0
    low_precision: bool = False

    def to_record(self) -> Dict[str, Any]:
        return {
            "delta": self.delta,
            "beta": self.beta,
            "lambda": self.lam,
            "beta_c": beta_critical(self.delta),
            "L_star": self.L_star,
            "eta_plus": self.eta_plus,
            "residual": self.residual,
            "low_precision": self.low_precision,
        }


def _log_cosh(z: float) -> float:
    z = abs(z)
    return z + math.log1p(math.exp(-2.0 * z)) - math.log(2.0)


def edge_message(x: float, beta: float) -> float:
    """h1(x); the limit x -> +inf (a fixed + spin) gives beta/2."""
    if math.isinf(x):
        return math.copysign(0.5 * beta, x)
    half = 0.5 * beta
    return 0.5 * (_log_cosh(x + half) - _log_cosh(x - half))


def tree_map(x: float, delta: int, beta: float, lam: float) -> float:
    return math.log(lam) + (delta - 1) * edge_message(x, beta)


def _check_delta(delta: int) -> None:
    if delta < 3:
        raise InvalidInputError(f"delta must be at least 3, got {delta}")


def beta_critical(delta: int) -> float:
    """beta_c(Delta) = log(Delta / (Delta - 2))."""
    _check_delta(delta)
    return math.log(delta / (delta - 2))


def _largest_root(delta: int, beta: float, lam: float, tolerance: float, max_iterations: int) -> float:
    log_lam = math.log(lam)
    if beta == 0.0:
        return log_lam

    def gap(x: float) -> float:
        return tree_map(x, delta, beta, lam) - x

    # F(+inf) bounds every root from above; iterating the increasing map from
    # there decreases monotonically towards the largest root.
    x = log_lam + (delta - 1) * 0.5 * beta
    for _ in range(max_iterations):
        nxt = tree_map(x, delta, beta, lam)
        step = x - nxt
        x = nxt
        if step <= tolerance:
            break

    if gap(x) >= 0.0:
        return x

    if log_lam > 0.0:
        low = 0.0
    else:
        if (delta - 1) * math.tanh(0.5 * beta) <= 1.0:
            return 0.0
        low = x
        for _ in range(2000):
            low *= 0.5
            if gap(low) > 0.0:
                break
        else:
            return 0.0
    return float(brentq(gap, low, x, xtol=1e-15, maxiter=1000))


def solve_tree(
    delta: int,
    beta: float,
    lam: float,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    critical_window: float = DEFAULT_CRITICAL_WINDOW,
) -> TreeSolution:
    """Largest fixed point L* and the all-plus root magnetization eta+."""
    _check_delta(delta)
    if beta < 0:
        raise InvalidInputError(f"beta must be nonnegative, got {beta}")
    if lam < 1.0:
        raise InvalidInputError(f"lambda must be at least 1, got {lam}")

    L_star = _largest_root(delta, beta, lam, tolerance, max_iterations)
    residual = abs(L_star - tree_map(L_star, delta, beta, lam))
    if residual > tolerance:
        raise ConvergenceError(
            f"fixed point for delta={delta}, beta={beta}, lambda={lam} has residual {residual:.3e} > {tolerance:.1e}"
        )

    low_precision = lam == 1.0 and abs(beta - beta_critical(delta)) < critical_window
    if low_precision:
        logger.warning("beta=%.9f is within %.1e of beta_c(%d); eta+ is low precision", beta, critical_window, delta)

    eta_plus = math.tanh(L_star + edge_message(L_star, beta))
    return TreeSolution(
        delta=delta,
        beta=beta,
        lam=lam,
        L_star=L_star,
        eta_plus=min(1.0, max(0.0, eta_plus)),
        residual=residual,
        low_precision=low_precision,
    )


def eta_plus(delta: int, beta: float, lam: float) -> float:
    return solve_tree(delta, beta, lam).eta_plus


def eta_c(delta: int, beta: float, strict: bool = False) -> float:
    """
    Zero-field tree magnetization eta+_{Delta, beta, 1}.

    At or below beta_c the threshold is not a positive number: returns 0.0 with a
    logged warning, or raises RegimeError when ``strict``.
    """
    if beta <= beta_critical(delta):
        message = f"beta={beta} <= beta_c({delta})={beta_critical(delta):.6f}: eta_c is not a positive threshold"
        if strict:
            raise RegimeError(message)
        logger.warning(message)
        return 0.0
    return solve_tree(delta, beta, 1.0).eta_plus


@lru_cache(maxsize=256)
def lambda_for_eta(delta: int, beta: float, eta: float, tolerance: float = DEFAULT_INVERSE_TOLERANCE) -> float:
    """Inverse of lambda -> eta+_{Delta, beta, lambda} on lambda >= 1, by bracketing and bisection."""
    base = solve_tree(delta, beta, 1.0).eta_plus
    if eta >= 1.0:
        raise InvalidInputError(f"eta must be below 1, got {eta}")
    if eta < base - tolerance:
        raise InvalidInputError(f"eta={eta} is below eta+ at lambda=1 ({base:.12f}); no solution with lambda >= 1")
    if abs(eta - base) <= tolerance:
        return 1.0

    def gap(lam: float) -> float:
        return solve_tree(delta, beta, lam).eta_plus - eta

    high = 2.0
    while gap(high) < 0.0:
        high *= 2.0
        if high > _LAMBDA_CEILING:
            raise ConvergenceError(f"could not bracket eta={eta} for delta={delta}, beta={beta}")
    lam = float(brentq(gap, 1.0, high, xtol=1e-15, maxiter=1000))
    logger.debug("lambda_for_eta(delta=%d, beta=%.6f, eta=%.12f) = %.12f", delta, beta, eta, lam)
    return lam


def tree_marginal_q(delta: int, beta: float) -> float:
    """
    Probability that the root of a (Delta-1)-ary tree is + when its children are
    independently + with probability alpha+ = (1 + eta_c) / 2.
    """
    if beta <= beta_critical(delta):
        raise RegimeError(f"q needs beta > beta_c({delta}); got beta={beta}")
    alpha = 0.5 * (1.0 + eta_c(delta, beta))
    # log A - log B with A = alpha e^beta + 1 - alpha, B = alpha + (1 - alpha) e^beta, both divided by e^beta
    log_a = math.log(alpha + (1.0 - alpha) * math.exp(-beta))
    log_b = math.log(alpha * math.exp(-beta) + (1.0 - alpha))
    return float(expit((delta - 1) * (log_a - log_b)))


def tree_recursion_eta(delta: int, beta: float, lam: float, depth: int) -> float:
    """Root magnetization of the depth-``depth`` Delta-regular tree with all leaves fixed to +."""
    _check_delta(delta)
    if depth < 0:
        raise InvalidInputError("depth must be nonnegative")
    if depth == 0:
        return 1.0
    log_lam = math.log(lam)
    message = edge_message(math.inf, beta)
    for _ in range(depth - 1):
        message = edge_message(log_lam + (delta - 1) * message, beta)
    return math.tanh(log_lam + delta * message)
