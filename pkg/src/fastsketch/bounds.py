#!/usr/bin/env python3
"""
Closed-form bounds for fastsketch.

The values the experiments print next to their Monte-Carlo frequencies, and
the thresholds the statistical tests compare against.
"""

from __future__ import annotations

import math

from fastsketch.errors import ContractViolation


def chernoff_upper(delta: float, mean: float) -> float:
    """Pr[X >= mean (1 + delta)] <= (e^delta / (1 + delta)^(1 + delta))^mean, mean = tJ."""
    if delta <= 0:
        raise ContractViolation(f"delta must be positive, got {delta}")
    return math.exp(mean * (delta - (1 + delta) * math.log1p(delta)))


def chernoff_lower(delta: float, mean: float) -> float:
    """Pr[X <= mean (1 - delta)] <= (e^-delta / (1 - delta)^(1 - delta))^mean, 0 < delta <= 1."""
    if not 0 < delta <= 1:
        raise ContractViolation(f"delta must be in (0, 1], got {delta}")
    # (1 - delta)^(1 - delta) is 1 at delta = 1
    return (math.exp(-delta) / (1 - delta) ** (1 - delta)) ** mean


def falling_factorial(x: float, k: int) -> float:
    """x (x - 1) ... (x - k + 1)."""
    if k < 0:
        raise ContractViolation(f"k must be non-negative, got {k}")
    result = 1.0
    for i in range(k):
        result *= x - i
    return result


def moment_bounds(j: float, t: int, k: int) -> tuple[float, float]:
    """Sandwich for E[prod X_i] over k distinct indices: ((tJ)_k / (t)_k, J^k)."""
    if not 1 <= k <= t:
        raise ContractViolation(f"k must be in [1, t={t}], got {k}")
    lower = max(0.0, falling_factorial(t * j, k) / falling_factorial(t, k))
    return lower, j**k


def separation_above_lower_bound(delta: float, r: int) -> float:
    """Pr[Above] when the mean is at least gamma + delta and r >= 8 / delta^3."""
    return 1.0 - math.exp(-(delta**2) * r / 2) / (1.0 - math.exp(-(delta**2) / 2))


def separation_above_upper_bound(delta: float, t: int) -> float:
    """Pr[Above] when the mean is at most gamma - delta."""
    return math.exp(-2 * delta**2 * t)


def lsh_pair_bound(j: float, k: int, t: int) -> float:
    """Upper bound on E[Y_a Y_b] for two signature rows: J^2K (1 + K(1-J)/(Jt))^K."""
    return j ** (2 * k) * (1 + k * (1 - j) / (j * t)) ** k


def lsh_success_lower_bound() -> float:
    """Worst-case probability that a query finds a neighbour: 1 / (16(e + 1))."""
    return 1.0 / (16 * (math.e + 1))


def hash_eval_budget(t: int, n: int, c1: float) -> float:
    """c1 (t ln t + n), the expected hash evaluation budget of one sketch."""
    return c1 * (t * math.log(t) + n)


__all__ = [
    "chernoff_lower",
    "chernoff_upper",
    "falling_factorial",
    "hash_eval_budget",
    "lsh_pair_bound",
    "lsh_success_lower_bound",
    "moment_bounds",
    "separation_above_lower_bound",
    "separation_above_upper_bound",
]
