#!/usr/bin/env python3
"""
Hashing module for fastsketch.

One mixed tabulation function realizes the whole family h_0 ... h_{2t-1}:
the round index is packed next to the element and both are hashed in a
single table-lookup pass that yields a bin word and a fraction word.

A keyed BLAKE2b hasher sits behind the same interface for differential
testing, and xxhash provides token digests and fingerprints.
"""

from __future__ import annotations

import hashlib
import logging
import struct
from abc import ABC, abstractmethod
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import xxhash

from fastsketch.config import (
    ALPHABET_SIZE,
    CHAR_BITS,
    DERIVED_CHARS,
    DERIVED_MASK,
    ELEMENT_CHARS,
    INPUT_CHARS,
    MASK64,
    MAX_T,
    ROUND_CODE_LIMIT,
    VECTORIZE_THRESHOLD,
)
from fastsketch.errors import ContractViolation

logger = logging.getLogger(__name__)

_CHAR_MASK = ALPHABET_SIZE - 1
_LOW32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
_SEED_PAIR = struct.Struct("<QQ")
_PACKED_KEY = struct.Struct("<HQ")


# =============================================================================
# Elements and Bins
# =============================================================================


@dataclass(frozen=True)
class HashOutput:
    """Result of one h_i evaluation: a bin in [t] and a 64-bit fraction."""

    bin: int
    fraction: int


def element_ids(elements: Iterable[int]) -> list[int]:
    """Return the distinct elements as a sorted list of 64-bit ints."""
    keys = sorted({int(a) for a in elements})
    if keys and (keys[0] < 0 or keys[-1] > MASK64):
        raise ContractViolation("elements must be 64-bit unsigned integers")
    return keys


def check_t(t: int) -> None:
    """Validate a sketch size."""
    if not 1 <= t <= MAX_T:
        raise ContractViolation(f"t must be in [1, {MAX_T}], got {t}")


def reduce_to_bin(word: int, t: int) -> int:
    """Map a 64-bit word onto [t] with a fixed-point multiply."""
    return (word * t) >> 64


def reduce_to_bin_array(words: np.ndarray, t: int) -> np.ndarray:
    """Vectorized reduce_to_bin: high 64 bits of words * t, for t < 2^32."""
    t64 = np.uint64(t)
    high = words >> _SHIFT32
    low = words & _LOW32
    return ((high * t64 + ((low * t64) >> _SHIFT32)) >> _SHIFT32).astype(np.int64)


# =============================================================================
# Hasher Interface
# =============================================================================


class KeyBatch(ABC):
    """A fixed set of elements prepared for repeated per-round hashing."""

    vectorized: bool = False

    def __init__(self, keys: Sequence[int]) -> None:
        self.keys = keys

    def __len__(self) -> int:
        return len(self.keys)

    @abstractmethod
    def words(self, code: int) -> tuple[Sequence[int], Sequence[int]]:
        """Return (bin words, fraction words) of every key under round code."""


class Hasher(ABC):
    """Seeded function family h(code, key) -> (bin word, fraction word)."""

    seed: int

    @abstractmethod
    def words(self, code: int, key: int) -> tuple[int, int]:
        """Hash the packed pair (code, key) to two 64-bit words."""

    def batch(self, keys: Sequence[int]) -> KeyBatch:
        """Prepare keys for hashing under many round codes."""
        return _ScalarBatch(self, keys)

    def hash_round(self, round_index: int, element: int, t: int) -> HashOutput:
        """Evaluate h_round(element) for a sketch of size t."""
        check_t(t)
        if not 0 <= round_index < 2 * t:
            raise ContractViolation(
                f"round must be in [0, {2 * t}), got {round_index}"
            )
        bin_word, fraction = self.words(round_index, element)
        if round_index < t:
            return HashOutput(reduce_to_bin(bin_word, t), fraction)
        return HashOutput(round_index - t, fraction)


class _ScalarBatch(KeyBatch):
    def __init__(self, hasher: Hasher, keys: Sequence[int]) -> None:
        super().__init__(keys)
        self._hasher = hasher

    def words(self, code: int) -> tuple[list[int], list[int]]:
        pairs = [self._hasher.words(code, key) for key in self.keys]
        return [p[0] for p in pairs], [p[1] for p in pairs]


# =============================================================================
# Mixed Tabulation
# =============================================================================


class SketchHasher(Hasher):
    """
    Mixed tabulation over (round, element).

    The 80-bit key is split into c = 10 characters of 8 bits: eight element
    bytes (little endian) followed by two round bytes. Each input table row
    holds a bin word, a fraction word and 32 bits of derived characters;
    the d = 4 derived characters index a second set of tables whose rows
    are XORed into the two output words.
    """

    def __init__(self, seed: int) -> None:
        self.seed = int(seed) & MASK64
        self.c = INPUT_CHARS
        self.d = DERIVED_CHARS

        raw = np.random.default_rng(self.seed).bit_generator.random_raw
        tables = raw(INPUT_CHARS * ALPHABET_SIZE * 3).reshape(
            INPUT_CHARS, ALPHABET_SIZE, 3
        )
        tables[:, :, 2] &= np.uint64(DERIVED_MASK)
        derived = raw(DERIVED_CHARS * ALPHABET_SIZE * 2).reshape(
            DERIVED_CHARS, ALPHABET_SIZE, 2
        )
        tables.setflags(write=False)
        derived.setflags(write=False)
        self.tables: np.ndarray = tables
        self.derived_tables: np.ndarray = derived

    def __repr__(self) -> str:
        return f"SketchHasher(seed={self.seed:#x})"

    @cached_property
    def _rows(self) -> list[list[list[int]]]:
        return self.tables.tolist()

    @cached_property
    def _derived_rows(self) -> list[list[list[int]]]:
        return self.derived_tables.tolist()

    def _round_part(self, code: int) -> tuple[int, int, int]:
        if not 0 <= code < ROUND_CODE_LIMIT:
            raise ContractViolation(f"round code out of range: {code}")
        rows = self._rows
        lo = rows[ELEMENT_CHARS][code & _CHAR_MASK]
        hi = rows[ELEMENT_CHARS + 1][code >> CHAR_BITS]
        return lo[0] ^ hi[0], lo[1] ^ hi[1], lo[2] ^ hi[2]

    def _element_part(self, key: int) -> tuple[int, int, int]:
        rows = self._rows
        b = f = d = 0
        for i, ch in enumerate(key.to_bytes(ELEMENT_CHARS, "little")):
            row = rows[i][ch]
            b ^= row[0]
            f ^= row[1]
            d ^= row[2]
        return b, f, d

    def _finish(self, b: int, f: int, d: int) -> tuple[int, int]:
        for table in self._derived_rows:
            row = table[d & _CHAR_MASK]
            b ^= row[0]
            f ^= row[1]
            d >>= CHAR_BITS
        return b, f

    def words(self, code: int, key: int) -> tuple[int, int]:
        if not 0 <= key <= MASK64:
            raise ContractViolation("elements must be 64-bit unsigned integers")
        eb, ef, ed = self._element_part(key)
        rb, rf, rd = self._round_part(code)
        return self._finish(eb ^ rb, ef ^ rf, ed ^ rd)

    def batch(self, keys: Sequence[int]) -> KeyBatch:
        if len(keys) >= VECTORIZE_THRESHOLD:
            return _VectorBatch(self, keys)
        return _TabulationBatch(self, keys)


class _TabulationBatch(KeyBatch):
    """Small batches: element characters are folded once, in Python ints."""

    def __init__(self, hasher: SketchHasher, keys: Sequence[int]) -> None:
        super().__init__(keys)
        self._hasher = hasher
        self._parts = [hasher._element_part(key) for key in keys]

    def words(self, code: int) -> tuple[list[int], list[int]]:
        rb, rf, rd = self._hasher._round_part(code)
        finish = self._hasher._finish
        bins: list[int] = []
        fractions: list[int] = []
        for eb, ef, ed in self._parts:
            b, f = finish(eb ^ rb, ef ^ rf, ed ^ rd)
            bins.append(b)
            fractions.append(f)
        return bins, fractions


class _VectorBatch(KeyBatch):
    """Large batches: the same evaluation on numpy uint64 arrays."""

    vectorized = True

    def __init__(self, hasher: SketchHasher, keys: Sequence[int]) -> None:
        super().__init__(keys)
        self._hasher = hasher
        array = np.asarray(keys, dtype=np.uint64)
        parts = np.zeros((array.shape[0], 3), dtype=np.uint64)
        for i in range(ELEMENT_CHARS):
            chars = ((array >> np.uint64(CHAR_BITS * i)) & np.uint64(_CHAR_MASK)).astype(
                np.intp
            )
            parts ^= hasher.tables[i, chars]
        self._parts = parts

    def words(self, code: int) -> tuple[np.ndarray, np.ndarray]:
        if not 0 <= code < ROUND_CODE_LIMIT:
            raise ContractViolation(f"round code out of range: {code}")
        tables = self._hasher.tables
        round_part = (
            tables[ELEMENT_CHARS, code & _CHAR_MASK]
            ^ tables[ELEMENT_CHARS + 1, code >> CHAR_BITS]
        )
        acc = self._parts ^ round_part
        bins = acc[:, 0].copy()
        fractions = acc[:, 1].copy()
        derived = acc[:, 2]
        for k in range(DERIVED_CHARS):
            chars = ((derived >> np.uint64(CHAR_BITS * k)) & np.uint64(_CHAR_MASK)).astype(
                np.intp
            )
            row = self._hasher.derived_tables[k, chars]
            bins ^= row[:, 0]
            fractions ^= row[:, 1]
        return bins, fractions


# =============================================================================
# Keyed PRF Hasher
# =============================================================================


class KeyedHasher(Hasher):
    """Keyed BLAKE2b over the packed (code, key); slow, used to cross-check tabulation."""

    def __init__(self, seed: int) -> None:
        self.seed = int(seed) & MASK64
        self._key = self.seed.to_bytes(8, "little")

    def __repr__(self) -> str:
        return f"KeyedHasher(seed={self.seed:#x})"

    def words(self, code: int, key: int) -> tuple[int, int]:
        if not 0 <= code < ROUND_CODE_LIMIT:
            raise ContractViolation(f"round code out of range: {code}")
        if not 0 <= key <= MASK64:
            raise ContractViolation("elements must be 64-bit unsigned integers")
        digest = hashlib.blake2b(
            _PACKED_KEY.pack(code, key), digest_size=16, key=self._key
        ).digest()
        return int.from_bytes(digest[:8], "little"), int.from_bytes(digest[8:], "little")


# =============================================================================
# Construction and Token Helpers
# =============================================================================


def new_hasher(seed: int) -> SketchHasher:
    """Build the mixed tabulation hasher for seed."""
    hasher = SketchHasher(seed)
    logger.debug("Built %r", hasher)
    return hasher


def tokenize(token: bytes | str, seed: int) -> int:
    """64-bit digest of a token under seed."""
    if isinstance(token, str):
        token = token.encode("utf-8")
    return xxhash.xxh3_64_intdigest(token, seed=int(seed) & MASK64)


def fingerprint(data: bytes, seed: int) -> int:
    """64-bit fingerprint of a byte string, used for bucket keys."""
    return xxhash.xxh3_64_intdigest(data, seed=int(seed) & MASK64)


def derive_seed(seed: int, stream: int) -> int:
    """Independent sub-seed number `stream` of seed."""
    return xxhash.xxh3_64_intdigest(_SEED_PAIR.pack(int(seed) & MASK64, stream))


def shingles(words: Sequence[str], w: int) -> list[bytes]:
    """
    Contiguous w-word shingles as UTF-8 byte strings.

    A line shorter than w becomes a single shingle so that it still maps to a
    nonempty set.
    """
    if w < 1:
        raise ContractViolation(f"shingle width must be >= 1, got {w}")
    if not words:
        return []
    if len(words) < w:
        return [" ".join(words).encode("utf-8")]
    return [" ".join(words[i : i + w]).encode("utf-8") for i in range(len(words) - w + 1)]


# =============================================================================
# Public API
# =============================================================================

__all__ = [
    "HashOutput",
    "Hasher",
    "KeyBatch",
    "KeyedHasher",
    "SketchHasher",
    "check_t",
    "derive_seed",
    "element_ids",
    "fingerprint",
    "new_hasher",
    "reduce_to_bin",
    "reduce_to_bin_array",
    "shingles",
    "tokenize",
]
