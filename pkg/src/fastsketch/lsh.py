#!/usr/bin/env python3
"""
LSH module for fastsketch.

Approximate similarity search over a static collection of sets. Every set
gets one size-t sketch; L signatures of K entries each are gathered from it
through the sampled T table and bucketed by fingerprint. A query verifies
its candidates with the separation test and an exact Jaccard check, so a
returned set always has similarity above j2.
"""

from __future__ import annotations

import logging
import math
import struct
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from fastsketch.baselines import sorted_jaccard
from fastsketch.config import (
    LSH_C,
    LSH_R,
    MAX_T,
    STREAM_QUERY,
    STREAM_SEPARATION,
    STREAM_SIGNATURES,
    STREAM_SKETCH,
    T_SEP_FLOOR,
    T_SEP_PER_BIT,
)
from fastsketch.errors import (
    ContractViolation,
    DuplicateId,
    EmptyInput,
    IncompatibleSketches,
    InvalidParameters,
)
from fastsketch.hashing import (
    SketchHasher,
    derive_seed,
    element_ids,
    fingerprint,
    new_hasher,
)
from fastsketch.separation import SeparationParams, separate_sketches
from fastsketch.sketch import Sketch, fill_sketch

logger = logging.getLogger(__name__)

_RECORD = struct.Struct("<IQ")

# Guards ceilings of values that are integers up to rounding
_CEIL_EPS = 1e-9


def _ceil(x: float) -> int:
    return math.ceil(x - _CEIL_EPS)


# =============================================================================
# Parameters
# =============================================================================


@dataclass(frozen=True)
class LshParams:
    j1: float
    j2: float
    n: int
    K: int
    L: int
    t: int
    rho: float
    gamma: float
    r: int = LSH_R
    C: int = LSH_C
    t_sep: int = T_SEP_FLOOR

    @property
    def block(self) -> int:
        """Width t / K of the column blocks of the T table."""
        return self.t // self.K

    @property
    def match_cap(self) -> int:
        """Matches collected before a query stops counting: ceil(C L) + 1."""
        return math.ceil(self.C * self.L) + 1

    @property
    def separation(self) -> SeparationParams:
        return SeparationParams(t=self.t_sep, r=self.r, gamma=self.gamma)


def _check_similarities(j1: float, j2: float) -> None:
    if not 0 < j2 < j1 < 1:
        raise InvalidParameters(f"need 0 < j2 < j1 < 1, got j1={j1}, j2={j2}")


def derive_params(j1: float, j2: float, n: int) -> LshParams:
    """
    Table count, signature width and sketch sizes for n sets.

    Separation runs with a fixed burn-in r = 16, well below the 8 / delta^3
    its Above guarantee asks for at practical gaps. A neighbour sitting at
    exactly J = j1 therefore almost always separates Below and is missed;
    recall is only reliable for neighbours clearly above j1.
    """
    _check_similarities(j1, j2)
    if n < 1:
        raise InvalidParameters(f"n must be positive, got {n}")

    K = max(1, _ceil(math.log(n) / math.log(1 / j2)))
    L = _ceil((1 / j1) ** K)
    t = K * _ceil(1 + K * (1 / j1 - 1))
    if t > MAX_T:
        raise InvalidParameters(f"sketch size t={t} exceeds the maximum {MAX_T}")

    t_sep = max(T_SEP_FLOOR, T_SEP_PER_BIT * math.ceil(math.log2(n + 1)))
    params = LshParams(
        j1=j1,
        j2=j2,
        n=n,
        K=K,
        L=L,
        t=t,
        rho=math.log(1 / j1) / math.log(1 / j2),
        gamma=(j1 + j2) / 2,
        r=LSH_R,
        C=LSH_C,
        t_sep=t_sep,
    )
    params.separation.check_gap((j1 - j2) / 2)
    logger.debug("Derived %s", params)
    return params


# =============================================================================
# Signatures
# =============================================================================


@dataclass(frozen=True, eq=False)
class SignatureTable:
    """L x K positions; column j samples from [j t/K, (j+1) t/K)."""

    t: int
    K: int
    positions: np.ndarray

    def __post_init__(self) -> None:
        positions = np.asarray(self.positions, dtype=np.int64)
        if positions.ndim != 2 or positions.shape[1] != self.K:
            raise ContractViolation(f"T table must have K={self.K} columns")
        if self.t % self.K:
            raise ContractViolation(f"t={self.t} is not divisible by K={self.K}")
        block = self.t // self.K
        low = np.arange(self.K, dtype=np.int64) * block
        if ((positions < low) | (positions >= low + block)).any():
            raise ContractViolation("T table entry outside its column block")
        positions.setflags(write=False)
        object.__setattr__(self, "positions", positions)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SignatureTable):
            return NotImplemented
        return (
            self.t == other.t
            and self.K == other.K
            and np.array_equal(self.positions, other.positions)
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def L(self) -> int:
        return self.positions.shape[0]

    @cached_property
    def rows(self) -> list[list[int]]:
        return self.positions.tolist()


def sample_signature_table(params: LshParams, seed: int) -> SignatureTable:
    """Independent uniform rows from the generator seeded by seed."""
    rng = np.random.default_rng(seed)
    offsets = rng.integers(0, params.block, size=(params.L, params.K), dtype=np.int64)
    positions = offsets + np.arange(params.K, dtype=np.int64) * params.block
    return SignatureTable(t=params.t, K=params.K, positions=positions)


def build_signatures(sketch: Sketch, sig: SignatureTable) -> list[int]:
    """L fingerprints of the K-tuples S(A)[T[i, 0]], ..., S(A)[T[i, K-1]]."""
    if sketch.t != sig.t:
        raise IncompatibleSketches(
            f"sketch size {sketch.t} does not match signature table size {sig.t}"
        )
    entries = sketch.entries
    return [
        fingerprint(b"".join(_RECORD.pack(*entries[p]) for p in row), sketch.seed)
        for row in sig.rows
    ]


# =============================================================================
# Index
# =============================================================================


@dataclass
class QueryResult:
    """Outcome of one query with its operation counters."""

    set_id: str | None = None
    jaccard: float | None = None
    matches: int = 0
    branch: str = "none"
    separations: int = 0
    separation_steps: int = 0
    exact_checks: int = 0
    hash_evals: int = 0

    @property
    def found(self) -> bool:
        return self.set_id is not None


@dataclass
class LshIndex:
    """
    Static search structure.

    ``buckets[i]`` maps a signature fingerprint to positions into ``ids``,
    ``sets`` and ``sep_sketches``, in insertion order.
    """

    params: LshParams
    sig: SignatureTable
    seed: int
    ids: list[str] = field(default_factory=list)
    sets: list[list[int]] = field(default_factory=list)
    buckets: list[dict[int, list[int]]] = field(default_factory=list)
    sep_sketches: list[Sketch] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.ids)

    @cached_property
    def sketch_hasher(self) -> SketchHasher:
        return new_hasher(derive_seed(self.seed, STREAM_SKETCH))

    @cached_property
    def separation_hasher(self) -> SketchHasher:
        return new_hasher(derive_seed(self.seed, STREAM_SEPARATION))

    @property
    def bucket_entries(self) -> int:
        return sum(len(p) for table in self.buckets for p in table.values())


def build_index(
    collection: Iterable[tuple[str, Iterable[int]]],
    j1: float,
    j2: float,
    seed: int,
) -> LshIndex:
    """Sketch, sign and bucket every set of the collection."""
    _check_similarities(j1, j2)
    items = [(set_id, element_ids(elements)) for set_id, elements in collection]

    params = derive_params(j1, j2, max(1, len(items)))
    sig = sample_signature_table(params, derive_seed(seed, STREAM_SIGNATURES))
    index = LshIndex(
        params=params,
        sig=sig,
        seed=seed,
        buckets=[{} for _ in range(params.L)],
    )

    seen: set[str] = set()
    for set_id, keys in items:
        if set_id in seen:
            raise DuplicateId(f"set id {set_id!r} appears more than once")
        if not keys:
            raise EmptyInput(f"set {set_id!r} is empty")
        seen.add(set_id)

        position = len(index.ids)
        sketch = fill_sketch(keys, params.t, index.sketch_hasher)
        for table, fp in zip(index.buckets, build_signatures(sketch, sig)):
            table.setdefault(fp, []).append(position)
        index.ids.append(set_id)
        index.sets.append(keys)
        index.sep_sketches.append(
            fill_sketch(keys, params.t_sep, index.separation_hasher)
        )

    logger.debug(
        "Built index over %d sets: K=%d L=%d t=%d t_sep=%d",
        len(index),
        params.K,
        params.L,
        params.t,
        params.t_sep,
    )
    return index


def _collect_matches(
    index: LshIndex, fingerprints: Sequence[int]
) -> list[tuple[int, int]]:
    cap = index.params.match_cap
    matches: list[tuple[int, int]] = []
    for i, (table, fp) in enumerate(zip(index.buckets, fingerprints)):
        for position in table.get(fp, ()):
            matches.append((i, position))
            if len(matches) >= cap:
                return matches
    return matches


def query(index: LshIndex, elements: Iterable[int]) -> QueryResult:
    """
    Look for a set with Jaccard similarity above j2 to the query.

    When more than C L signature matches turn up, one of the first ceil(C L)
    is sampled and checked exactly. Otherwise the candidates are screened by
    separation on their size-t_sep sketches, in table then insertion order,
    and the first one passing the exact check is returned.
    """
    keys = element_ids(elements)
    if not keys:
        raise EmptyInput("cannot query with an empty set")
    params = index.params
    result = QueryResult()
    if not index.ids:
        return result

    sketch = fill_sketch(keys, params.t, index.sketch_hasher)
    result.hash_evals += sketch.hash_evals
    matches = _collect_matches(index, build_signatures(sketch, index.sig))
    result.matches = len(matches)
    if not matches:
        return result

    if len(matches) > params.C * params.L:
        result.branch = "sample"
        pool = matches[: math.ceil(params.C * params.L)]
        digest = fingerprint(
            b"".join(_RECORD.pack(*entry) for entry in sketch.entries), sketch.seed
        )
        rng = np.random.default_rng(derive_seed(index.seed ^ digest, STREAM_QUERY))
        _, position = pool[int(rng.integers(len(pool)))]
        result.exact_checks = 1
        jaccard = sorted_jaccard(index.sets[position], keys)
        if jaccard > params.j2:
            result.set_id = index.ids[position]
            result.jaccard = jaccard
        return result

    result.branch = "separate"
    sep_params = params.separation
    query_sep = fill_sketch(keys, params.t_sep, index.separation_hasher)
    result.hash_evals += query_sep.hash_evals
    screened: set[int] = set()
    for _, position in matches:
        if position in screened:
            continue
        screened.add(position)
        outcome = separate_sketches(index.sep_sketches[position], query_sep, sep_params)
        result.separations += 1
        result.separation_steps += outcome.iterations
        if not outcome.above:
            continue
        result.exact_checks += 1
        jaccard = sorted_jaccard(index.sets[position], keys)
        if jaccard > params.j2:
            result.set_id = index.ids[position]
            result.jaccard = jaccard
            return result
    return result


__all__ = [
    "LshIndex",
    "LshParams",
    "QueryResult",
    "SignatureTable",
    "build_index",
    "build_signatures",
    "derive_params",
    "query",
    "sample_signature_table",
]
