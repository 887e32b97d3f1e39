#!/usr/bin/env python3
"""
Sketch module for fastsketch.

Builds the size-t similarity sketch S(A, t): entry j is the smallest value
v_i(a) over all rounds i in [2t] and elements a with b_i(a) = j. Round i
values live in [i, i + 1), so they are stored exactly as (round, fraction)
integer pairs and compared lexicographically.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from fastsketch.config import BBIT_MAX, BBIT_MIN
from fastsketch.errors import ContractViolation, EmptyInput, IncompatibleSketches
from fastsketch.hashing import (
    Hasher,
    check_t,
    element_ids,
    reduce_to_bin,
    reduce_to_bin_array,
)

logger = logging.getLogger(__name__)


# =============================================================================
# Domain Types
# =============================================================================


class SketchValue(NamedTuple):
    """One sketch entry; the value it encodes is round + fraction / 2^64."""

    round: int
    fraction: int


@dataclass(frozen=True)
class Sketch:
    """A filled similarity sketch.

    ``hash_evals`` counts the h_i evaluations spent building it and does not
    take part in equality.
    """

    t: int
    entries: tuple[SketchValue, ...]
    seed: int
    hash_evals: int = field(default=0, compare=False)

    def __post_init__(self) -> None:
        if len(self.entries) != self.t:
            raise ContractViolation(
                f"sketch holds {len(self.entries)} entries, expected {self.t}"
            )

    @property
    def sentinel(self) -> SketchValue:
        return SketchValue(2 * self.t, 0)

    @property
    def is_filled(self) -> bool:
        return all(entry.round < 2 * self.t for entry in self.entries)


@dataclass(frozen=True)
class FeatureVector:
    """b-bit features: the nonzero coordinate of each of the t blocks of size 2^b."""

    b: int
    t: int
    indices: tuple[int, ...]

    @property
    def dimension(self) -> int:
        return self.t << self.b

    def to_dense(self) -> np.ndarray:
        """Concatenated 0/1 indicator vectors, length 2^b * t."""
        dense = np.zeros(self.dimension, dtype=np.uint8)
        dense[list(self.indices)] = 1
        return dense


# =============================================================================
# Construction
# =============================================================================


def _keys_or_raise(elements: Iterable[int]) -> list[int]:
    keys = element_ids(elements)
    if not keys:
        raise EmptyInput("cannot sketch an empty set")
    return keys


def fill_sketch(elements: Iterable[int], t: int, hasher: Hasher) -> Sketch:
    """
    Fill-Sketch: hash every element round by round and stop after the first
    round that leaves no bin empty.

    Once a bin is filled it never changes, because every later round carries
    strictly larger values. Rounds t .. 2t-1 send everything to bin round - t,
    so the loop always terminates with a full sketch.
    """
    check_t(t)
    keys = _keys_or_raise(elements)
    batch = hasher.batch(keys)

    rounds = [2 * t] * t
    fractions = [0] * t
    filled = 0
    hash_evals = 0

    for rnd in range(2 * t):
        bin_words, frac_words = batch.words(rnd)
        hash_evals += len(keys)

        if rnd >= t:
            j = rnd - t
            if rounds[j] == 2 * t:
                rounds[j] = rnd
                fractions[j] = (
                    int(frac_words.min()) if batch.vectorized else min(frac_words)
                )
                filled += 1
        elif batch.vectorized:
            filled += _fill_round_vectorized(
                rnd, t, bin_words, frac_words, rounds, fractions
            )
        else:
            for bin_word, frac in zip(bin_words, frac_words):
                j = reduce_to_bin(bin_word, t)
                if rounds[j] == 2 * t:
                    rounds[j] = rnd
                    fractions[j] = frac
                    filled += 1
                elif rounds[j] == rnd and frac < fractions[j]:
                    fractions[j] = frac

        if filled == t:
            break

    entries = tuple(SketchValue(r, f) for r, f in zip(rounds, fractions))
    return Sketch(t=t, entries=entries, seed=hasher.seed, hash_evals=hash_evals)


def _fill_round_vectorized(
    rnd: int,
    t: int,
    bin_words: np.ndarray,
    frac_words: np.ndarray,
    rounds: list[int],
    fractions: list[int],
) -> int:
    """Apply one round to the empty bins; returns the number of bins filled."""
    bins = reduce_to_bin_array(bin_words, t)
    empty = np.fromiter((r == 2 * t for r in rounds), dtype=bool, count=t)
    hit = empty[bins]
    if not hit.any():
        return 0
    bins = bins[hit]
    fracs = frac_words[hit]
    order = np.lexsort((fracs, bins))
    bins = bins[order]
    fracs = fracs[order]
    first = np.ones(bins.shape[0], dtype=bool)
    first[1:] = bins[1:] != bins[:-1]
    for j, frac in zip(bins[first].tolist(), fracs[first].tolist()):
        rounds[j] = rnd
        fractions[j] = frac
    return int(first.sum())


def reference_sketch(elements: Iterable[int], t: int, hasher: Hasher) -> Sketch:
    """Evaluate S(A)[j] = min{v_i(a) | b_i(a) = j} over all 2t rounds, no early exit."""
    check_t(t)
    keys = _keys_or_raise(elements)
    entries = [SketchValue(2 * t, 0)] * t
    for rnd in range(2 * t):
        for a in keys:
            out = hasher.hash_round(rnd, a, t)
            value = SketchValue(rnd, out.fraction)
            if value < entries[out.bin]:
                entries[out.bin] = value
    return Sketch(t=t, entries=tuple(entries), seed=hasher.seed, hash_evals=2 * t * len(keys))


# =============================================================================
# Combinators and Estimators
# =============================================================================


def _check_compatible(sa: Sketch, sb: Sketch) -> None:
    if sa.t != sb.t:
        raise IncompatibleSketches(f"sketch sizes differ: {sa.t} != {sb.t}")
    if sa.seed != sb.seed:
        raise IncompatibleSketches(f"sketch seeds differ: {sa.seed:#x} != {sb.seed:#x}")


def union_sketch(sa: Sketch, sb: Sketch) -> Sketch:
    """S(A | B) from S(A) and S(B): the entrywise minimum."""
    _check_compatible(sa, sb)
    entries = tuple(min(x, y) for x, y in zip(sa.entries, sb.entries))
    return Sketch(t=sa.t, entries=entries, seed=sa.seed)


def match_indicators(sa: Sketch, sb: Sketch) -> tuple[int, ...]:
    """X_i = [S(A)[i] = S(B)[i]] for every i."""
    _check_compatible(sa, sb)
    return tuple(int(x == y) for x, y in zip(sa.entries, sb.entries))


def match_count(sa: Sketch, sb: Sketch) -> int:
    """X = number of equal entries."""
    return sum(match_indicators(sa, sb))


def estimate_jaccard(sa: Sketch, sb: Sketch) -> float:
    """Unbiased estimate of J(A, B): the fraction of equal entries."""
    return match_count(sa, sb) / sa.t


# =============================================================================
# b-bit Features
# =============================================================================


def featurize_bbit(sketch: Sketch, b: int) -> FeatureVector:
    """Keep the low b bits of every fraction and place them in block j."""
    if not BBIT_MIN <= b <= BBIT_MAX:
        raise ContractViolation(f"b must be in [{BBIT_MIN}, {BBIT_MAX}], got {b}")
    if not sketch.is_filled:
        raise ContractViolation("cannot featurize a sketch with empty entries")
    mask = (1 << b) - 1
    indices = tuple(
        (j << b) + (entry.fraction & mask) for j, entry in enumerate(sketch.entries)
    )
    return FeatureVector(b=b, t=sketch.t, indices=indices)


def dot_estimate(fa: FeatureVector, fb: FeatureVector) -> int:
    """Sparse dot product of two b-bit feature vectors."""
    if fa.b != fb.b or fa.t != fb.t:
        raise IncompatibleSketches(
            f"feature shapes differ: (b={fa.b}, t={fa.t}) vs (b={fb.b}, t={fb.t})"
        )
    return sum(1 for x, y in zip(fa.indices, fb.indices) if x == y)


# =============================================================================
# Public API
# =============================================================================

__all__ = [
    "FeatureVector",
    "Sketch",
    "SketchValue",
    "dot_estimate",
    "estimate_jaccard",
    "featurize_bbit",
    "fill_sketch",
    "match_count",
    "match_indicators",
    "reference_sketch",
    "union_sketch",
]
