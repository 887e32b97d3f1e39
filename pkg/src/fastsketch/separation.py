#!/usr/bin/env python3
"""
Separation module for fastsketch.

A sequential threshold test on a stream of values in [0, 1]: it reports
Below as soon as the running sum after at least r steps is no larger than
i * gamma + i^(2/3), and Above when the whole stream stays over that line.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from fastsketch.errors import ContractViolation, IncompatibleSketches
from fastsketch.sketch import Sketch, match_indicators

logger = logging.getLogger(__name__)


class Decision(Enum):
    """Outcome of a separation run."""

    ABOVE = "above"
    BELOW = "below"


@dataclass(frozen=True)
class SeparationParams:
    """Stream length t, burn-in r and threshold gamma.

    Argument order is (t, r, gamma) throughout the package.
    """

    t: int
    r: int
    gamma: float

    def __post_init__(self) -> None:
        if self.t < 1:
            raise ContractViolation(f"t must be positive, got {self.t}")
        if not 1 <= self.r <= self.t:
            raise ContractViolation(f"r must be in [1, t={self.t}], got {self.r}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ContractViolation(f"gamma must be in [0, 1], got {self.gamma}")

    @cached_property
    def thresholds(self) -> list[float]:
        """thresholds[i - 1] = i * gamma + cbrt(i * i) for i = 1 .. t."""
        i = np.arange(1, self.t + 1, dtype=np.float64)
        return (i * self.gamma + np.cbrt(i * i)).tolist()

    def check_gap(self, delta: float) -> bool:
        """Whether r >= 8 / delta^3, the burn-in the Above guarantee needs."""
        if delta <= 0:
            raise ContractViolation(f"gap must be positive, got {delta}")
        required = 8.0 / delta**3
        if self.r < required:
            logger.warning(
                "Separation burn-in r=%d is below 8/delta^3=%.1f for delta=%.3f; "
                "the Above guarantee does not apply",
                self.r,
                required,
                delta,
            )
            return False
        return True


@dataclass(frozen=True)
class SeparationResult:
    decision: Decision
    iterations: int

    @property
    def above(self) -> bool:
        return self.decision is Decision.ABOVE


def separate(x: Sequence[float], params: SeparationParams) -> SeparationResult:
    """Run the test over x; ties with the threshold go to Below."""
    if len(x) != params.t:
        raise ContractViolation(
            f"stream holds {len(x)} values, expected t={params.t}"
        )
    thresholds = params.thresholds
    r = params.r
    total = 0.0
    for i in range(1, params.t + 1):
        total += x[i - 1]
        if i >= r and total <= thresholds[i - 1]:
            return SeparationResult(Decision.BELOW, i)
    return SeparationResult(Decision.ABOVE, params.t)


def separate_sketches(sa: Sketch, sb: Sketch, params: SeparationParams) -> SeparationResult:
    """Separate on the match indicators of two sketches of size params.t."""
    if sa.t != params.t:
        raise IncompatibleSketches(
            f"sketch size {sa.t} does not match separation length {params.t}"
        )
    return separate(match_indicators(sa, sb), params)


__all__ = [
    "Decision",
    "SeparationParams",
    "SeparationResult",
    "separate",
    "separate_sketches",
]
