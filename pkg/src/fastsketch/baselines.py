#!/usr/bin/env python3
"""
Baseline sketches for fastsketch.

t x MinHash, one permutation hashing (OPH) and two ways of densifying OPH
sketches, plus the exact Jaccard similarity used to verify candidates.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from fastsketch.config import OPH_CODE, PROBE_CODE
from fastsketch.errors import EmptyInput, IncompatibleSketches
from fastsketch.hashing import (
    Hasher,
    check_t,
    element_ids,
    reduce_to_bin,
    reduce_to_bin_array,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BaselineSketch:
    """
    A MinHash or OPH sketch.

    ``entries`` holds 64-bit values; ``tags`` records provenance (0 for a
    value hashed into its own bin, k > 0 for a value borrowed by
    densification after k steps); bit j of ``empties`` is set while bin j
    has received no element.
    """

    t: int
    entries: tuple[int, ...]
    seed: int
    tags: tuple[int, ...] = ()
    empties: int = 0
    hash_evals: int = field(default=0, compare=False)

    def __post_init__(self) -> None:
        if not self.tags:
            object.__setattr__(self, "tags", (0,) * self.t)

    @property
    def empty_bins(self) -> list[int]:
        return [j for j in range(self.t) if self.empties >> j & 1]

    @property
    def filled_bins(self) -> list[int]:
        return [j for j in range(self.t) if not self.empties >> j & 1]

    @property
    def distinct_values(self) -> int:
        """Number of distinct underlying values among the filled entries."""
        return len({self.entries[j] for j in self.filled_bins})


# =============================================================================
# Sketches
# =============================================================================


def _keys_or_raise(elements: Iterable[int]) -> list[int]:
    keys = element_ids(elements)
    if not keys:
        raise EmptyInput("cannot sketch an empty set")
    return keys


def _row_minimum(fractions: Sequence[int] | np.ndarray) -> int:
    if isinstance(fractions, np.ndarray):
        return int(fractions.min())
    return min(fractions)


def minhash_sketch(elements: Iterable[int], t: int, hasher: Hasher) -> BaselineSketch:
    """Entry i is the minimum over A of an independent 64-bit hash keyed by (i, a)."""
    check_t(t)
    keys = _keys_or_raise(elements)
    batch = hasher.batch(keys)
    entries = tuple(_row_minimum(batch.words(i)[1]) for i in range(t))
    return BaselineSketch(
        t=t, entries=entries, seed=hasher.seed, hash_evals=t * len(keys)
    )


def oph_sketch(elements: Iterable[int], t: int, hasher: Hasher) -> BaselineSketch:
    """One hash pass: the bin word picks a bucket, the fraction word is MinHashed in it."""
    check_t(t)
    keys = _keys_or_raise(elements)
    bin_words, frac_words = hasher.batch(keys).words(OPH_CODE)

    if isinstance(bin_words, np.ndarray):
        bins = reduce_to_bin_array(bin_words, t).tolist()
        fracs = frac_words.tolist()
    else:
        bins = [reduce_to_bin(w, t) for w in bin_words]
        fracs = list(frac_words)

    values: dict[int, int] = {}
    for j, frac in zip(bins, fracs):
        if j not in values or frac < values[j]:
            values[j] = frac

    entries = tuple(values.get(j, 0) for j in range(t))
    empties = sum(1 << j for j in range(t) if j not in values)
    return BaselineSketch(
        t=t, entries=entries, seed=hasher.seed, empties=empties, hash_evals=len(keys)
    )


# =============================================================================
# Densification
# =============================================================================


def _check_densifiable(sketch: BaselineSketch, hasher: Hasher) -> bool:
    """True when there is something to fill; raises when nothing can be borrowed."""
    if sketch.seed != hasher.seed:
        raise IncompatibleSketches("densification hasher seed differs from the sketch seed")
    if sketch.empties == 0:
        return False
    if sketch.empties == (1 << sketch.t) - 1:
        raise EmptyInput("cannot densify a sketch with no filled bins")
    return True


def densify_rotation(sketch: BaselineSketch, hasher: Hasher) -> BaselineSketch:
    """
    Rotation densification: an empty bin copies the nearest filled bin to its
    right (cyclically); the tag is the distance travelled.
    """
    if not _check_densifiable(sketch, hasher):
        return sketch
    t = sketch.t
    entries = list(sketch.entries)
    tags = list(sketch.tags)
    for j in sketch.empty_bins:
        k = 1
        while sketch.empties >> ((j + k) % t) & 1:
            k += 1
        donor = (j + k) % t
        entries[j] = sketch.entries[donor]
        tags[j] = k
    return BaselineSketch(
        t=t,
        entries=tuple(entries),
        seed=sketch.seed,
        tags=tuple(tags),
        hash_evals=sketch.hash_evals,
    )


def densify_optimal(sketch: BaselineSketch, hasher: Hasher) -> BaselineSketch:
    """
    Optimal-style densification: each empty bin j follows its own probe
    sequence h(j, 1), h(j, 2), ... until it hits a filled bin; the tag is the
    number of probes.
    """
    if not _check_densifiable(sketch, hasher):
        return sketch
    t = sketch.t
    entries = list(sketch.entries)
    tags = list(sketch.tags)
    probes = 0
    for j in sketch.empty_bins:
        attempt = 0
        while True:
            attempt += 1
            bin_word, _ = hasher.words(PROBE_CODE, (j << 32) | attempt)
            donor = reduce_to_bin(bin_word, t)
            if not sketch.empties >> donor & 1:
                break
        entries[j] = sketch.entries[donor]
        tags[j] = attempt
        probes += attempt
    return BaselineSketch(
        t=t,
        entries=tuple(entries),
        seed=sketch.seed,
        tags=tuple(tags),
        hash_evals=sketch.hash_evals + probes,
    )


# =============================================================================
# Estimators
# =============================================================================


def baseline_match_count(sa: BaselineSketch, sb: BaselineSketch) -> int:
    """Number of bins where both sketches hold the same (value, provenance)."""
    if sa.t != sb.t or sa.seed != sb.seed:
        raise IncompatibleSketches("baseline sketches differ in size or seed")
    filled = ~(sa.empties | sb.empties)
    return sum(
        1
        for j in range(sa.t)
        if filled >> j & 1
        and sa.entries[j] == sb.entries[j]
        and sa.tags[j] == sb.tags[j]
    )


def estimate_baseline(sa: BaselineSketch, sb: BaselineSketch) -> float:
    return baseline_match_count(sa, sb) / sa.t


def sorted_jaccard(a: Sequence[int], b: Sequence[int]) -> float:
    """Exact Jaccard of two sorted duplicate-free sequences by merging."""
    if not a and not b:
        raise EmptyInput("Jaccard similarity of two empty sets is undefined")
    i = j = common = 0
    while i < len(a) and j < len(b):
        if a[i] == b[j]:
            common += 1
            i += 1
            j += 1
        elif a[i] < b[j]:
            i += 1
        else:
            j += 1
    return common / (len(a) + len(b) - common)


def exact_jaccard(a: Iterable[int], b: Iterable[int]) -> float:
    """J(A, B) = |A & B| / |A | B|."""
    return sorted_jaccard(element_ids(a), element_ids(b))


# =============================================================================
# Public API
# =============================================================================

__all__ = [
    "BaselineSketch",
    "baseline_match_count",
    "densify_optimal",
    "densify_rotation",
    "estimate_baseline",
    "exact_jaccard",
    "minhash_sketch",
    "oph_sketch",
    "sorted_jaccard",
]
