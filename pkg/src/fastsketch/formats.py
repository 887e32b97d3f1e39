#!/usr/bin/env python3
"""
Binary formats for fastsketch.

All integers are little endian.

    FSK1  sketch           magic, t: u32, seed: u64, t x (round: u32, fraction: u64)
    FSKB  baseline sketch  magic, t: u32, seed: u64, t x (tag: u32, value: u64)
    FSLI  LSH index        magic, version: u16, parameters, T table,
                           bucket tables, set store, separation sketches

Decoders raise FormatError carrying the byte offset of the failing field.
"""

from __future__ import annotations

import logging
import math
import struct
from pathlib import Path

from fastsketch.baselines import BaselineSketch
from fastsketch.config import (
    BASELINE_MAGIC,
    EMPTY_TAG,
    INDEX_MAGIC,
    INDEX_VERSION,
    MAX_T,
    SKETCH_MAGIC,
    STREAM_SEPARATION,
)
from fastsketch.errors import ContractViolation, FormatError
from fastsketch.hashing import derive_seed
from fastsketch.lsh import LshIndex, LshParams, SignatureTable
from fastsketch.sketch import Sketch, SketchValue

logger = logging.getLogger(__name__)

_HEADER = struct.Struct("<4sIQ")
_RECORD = struct.Struct("<IQ")
_VERSION = struct.Struct("<H")
_PARAMS = struct.Struct("<ddQ6IQ")
_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")
_BUCKET = struct.Struct("<QI")


class _Reader:
    """Cursor over a byte string; every read failure reports its offset."""

    def __init__(self, data: bytes) -> None:
        self.data = data
        self.offset = 0

    def unpack(self, fmt: struct.Struct, what: str) -> tuple:
        if self.offset + fmt.size > len(self.data):
            raise FormatError(f"truncated {what}", self.offset)
        values = fmt.unpack_from(self.data, self.offset)
        self.offset += fmt.size
        return values

    def u32(self, what: str) -> int:
        return self.unpack(_U32, what)[0]

    def array(self, code: str, count: int, what: str) -> tuple[int, ...]:
        return self.unpack(struct.Struct(f"<{count}{code}"), what)

    def raw(self, size: int, what: str) -> bytes:
        if self.offset + size > len(self.data):
            raise FormatError(f"truncated {what}", self.offset)
        chunk = self.data[self.offset : self.offset + size]
        self.offset += size
        return chunk

    def expect_end(self) -> None:
        if self.offset != len(self.data):
            raise FormatError(
                f"{len(self.data) - self.offset} trailing bytes", self.offset
            )


def _read_header(reader: _Reader, magic: bytes) -> tuple[int, int]:
    found, t, seed = reader.unpack(_HEADER, "header")
    if found != magic:
        raise FormatError(f"bad magic {found!r}, expected {magic!r}", 0)
    if not 1 <= t <= MAX_T:
        raise FormatError(f"sketch size {t} out of range", 4)
    return t, seed


# =============================================================================
# Sketches
# =============================================================================


def encode_sketch(sketch: Sketch) -> bytes:
    parts = [_HEADER.pack(SKETCH_MAGIC, sketch.t, sketch.seed)]
    parts.extend(_RECORD.pack(entry.round, entry.fraction) for entry in sketch.entries)
    return b"".join(parts)


def _read_sketch_entries(reader: _Reader, t: int) -> tuple[SketchValue, ...]:
    entries = []
    for j in range(t):
        start = reader.offset
        rnd, fraction = reader.unpack(_RECORD, "sketch entry")
        if rnd > 2 * t:
            raise FormatError(f"round {rnd} exceeds sentinel {2 * t}", start)
        # rounds t .. 2t-1 only ever fill bin round - t
        if t <= rnd < 2 * t and rnd != t + j:
            raise FormatError(f"round {rnd} cannot fill bin {j}", start)
        entries.append(SketchValue(rnd, fraction))
    return tuple(entries)


def decode_sketch(data: bytes) -> Sketch:
    reader = _Reader(data)
    t, seed = _read_header(reader, SKETCH_MAGIC)
    entries = _read_sketch_entries(reader, t)
    reader.expect_end()
    return Sketch(t=t, entries=entries, seed=seed)


def encode_baseline(sketch: BaselineSketch) -> bytes:
    """Empty bins are written with tag 0xFFFFFFFF and value 0."""
    parts = [_HEADER.pack(BASELINE_MAGIC, sketch.t, sketch.seed)]
    for j in range(sketch.t):
        if sketch.empties >> j & 1:
            parts.append(_RECORD.pack(EMPTY_TAG, 0))
        else:
            parts.append(_RECORD.pack(sketch.tags[j], sketch.entries[j]))
    return b"".join(parts)


def decode_baseline(data: bytes) -> BaselineSketch:
    reader = _Reader(data)
    t, seed = _read_header(reader, BASELINE_MAGIC)
    entries: list[int] = []
    tags: list[int] = []
    empties = 0
    for j in range(t):
        tag, value = reader.unpack(_RECORD, "baseline entry")
        if tag == EMPTY_TAG:
            empties |= 1 << j
            tag = value = 0
        entries.append(value)
        tags.append(tag)
    reader.expect_end()
    return BaselineSketch(
        t=t, entries=tuple(entries), seed=seed, tags=tuple(tags), empties=empties
    )


# =============================================================================
# LSH Index
# =============================================================================


def encode_index(index: LshIndex) -> bytes:
    p = index.params
    parts = [
        INDEX_MAGIC,
        _VERSION.pack(INDEX_VERSION),
        _PARAMS.pack(p.j1, p.j2, p.n, p.K, p.L, p.t, p.r, p.C, p.t_sep, index.seed),
        struct.pack(f"<{p.L * p.K}I", *index.sig.positions.ravel().tolist()),
    ]
    for table in index.buckets:
        parts.append(_U32.pack(len(table)))
        for fp, positions in table.items():
            parts.append(_BUCKET.pack(fp, len(positions)))
            parts.append(struct.pack(f"<{len(positions)}I", *positions))

    parts.append(_U32.pack(len(index.ids)))
    for set_id, keys in zip(index.ids, index.sets):
        raw_id = set_id.encode("utf-8")
        parts.append(_U16.pack(len(raw_id)))
        parts.append(raw_id)
        parts.append(_U32.pack(len(keys)))
        parts.append(struct.pack(f"<{len(keys)}Q", *keys))

    for sketch in index.sep_sketches:
        parts.extend(_RECORD.pack(e.round, e.fraction) for e in sketch.entries)
    return b"".join(parts)


def _read_params(reader: _Reader) -> tuple[LshParams, int]:
    start = reader.offset
    j1, j2, n, K, L, t, r, C, t_sep, seed = reader.unpack(_PARAMS, "parameters")
    if not 0 < j2 < j1 < 1:
        raise FormatError(f"invalid similarity thresholds j1={j1}, j2={j2}", start)
    if not (K >= 1 and L >= 1 and n >= 1 and 1 <= t <= MAX_T and t % K == 0):
        raise FormatError(f"inconsistent shape K={K} L={L} t={t}", start)
    if not (1 <= r <= t_sep <= MAX_T and C >= 1):
        raise FormatError(f"inconsistent separation r={r} t_sep={t_sep}", start)
    params = LshParams(
        j1=j1,
        j2=j2,
        n=n,
        K=K,
        L=L,
        t=t,
        rho=math.log(1 / j1) / math.log(1 / j2),
        gamma=(j1 + j2) / 2,
        r=r,
        C=C,
        t_sep=t_sep,
    )
    return params, seed


def decode_index(data: bytes) -> LshIndex:
    reader = _Reader(data)
    magic = reader.raw(len(INDEX_MAGIC), "magic")
    if magic != INDEX_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {INDEX_MAGIC!r}", 0)
    start = reader.offset
    (version,) = reader.unpack(_VERSION, "version")
    if version != INDEX_VERSION:
        raise FormatError(f"unsupported index version {version}", start)

    params, seed = _read_params(reader)

    start = reader.offset
    flat = reader.array("I", params.L * params.K, "T table")
    try:
        sig = SignatureTable(
            t=params.t,
            K=params.K,
            positions=[flat[i : i + params.K] for i in range(0, len(flat), params.K)],
        )
    except ContractViolation as e:
        raise FormatError(str(e), start) from e

    buckets: list[dict[int, list[int]]] = []
    for _ in range(params.L):
        table: dict[int, list[int]] = {}
        for _ in range(reader.u32("bucket count")):
            fp, length = reader.unpack(_BUCKET, "bucket header")
            table[fp] = list(reader.array("I", length, "bucket positions"))
        buckets.append(table)

    ids: list[str] = []
    sets: list[list[int]] = []
    for _ in range(reader.u32("set count")):
        start = reader.offset
        (id_length,) = reader.unpack(_U16, "set id length")
        try:
            set_id = reader.raw(id_length, "set id").decode("utf-8")
        except UnicodeDecodeError as e:
            raise FormatError("set id is not valid UTF-8", start) from e
        start = reader.offset
        keys = list(reader.array("Q", reader.u32("set size"), "set elements"))
        if not keys or any(a >= b for a, b in zip(keys, keys[1:])):
            raise FormatError(f"set {set_id!r} is empty or unsorted", start)
        ids.append(set_id)
        sets.append(keys)

    for table in buckets:
        for positions in table.values():
            if any(p >= len(ids) for p in positions):
                raise FormatError("bucket refers to an unknown set", reader.offset)

    sep_seed = derive_seed(seed, STREAM_SEPARATION)
    sep_sketches = [
        Sketch(
            t=params.t_sep,
            entries=_read_sketch_entries(reader, params.t_sep),
            seed=sep_seed,
        )
        for _ in ids
    ]
    reader.expect_end()

    logger.debug("Decoded index over %d sets", len(ids))
    return LshIndex(
        params=params,
        sig=sig,
        seed=seed,
        ids=ids,
        sets=sets,
        buckets=buckets,
        sep_sketches=sep_sketches,
    )


# =============================================================================
# Files
# =============================================================================


def write_sketch(path: Path, sketch: Sketch) -> None:
    path.write_bytes(encode_sketch(sketch))


def read_sketch(path: Path) -> Sketch:
    return decode_sketch(path.read_bytes())


def write_baseline(path: Path, sketch: BaselineSketch) -> None:
    path.write_bytes(encode_baseline(sketch))


def read_baseline(path: Path) -> BaselineSketch:
    return decode_baseline(path.read_bytes())


def write_index(path: Path, index: LshIndex) -> None:
    path.write_bytes(encode_index(index))
    logger.info("Wrote index over %d sets to %s", len(index), path)


def read_index(path: Path) -> LshIndex:
    return decode_index(path.read_bytes())


__all__ = [
    "decode_baseline",
    "decode_index",
    "decode_sketch",
    "encode_baseline",
    "encode_index",
    "encode_sketch",
    "read_baseline",
    "read_index",
    "read_sketch",
    "write_baseline",
    "write_index",
    "write_sketch",
]
