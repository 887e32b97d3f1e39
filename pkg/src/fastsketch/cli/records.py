#!/usr/bin/env python3
"""
Result records written by the commands, as CSV or JSON lines.

Every record carries the seed that reproduces it. Reading a file back and
writing it again yields identical bytes.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import types
import typing
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import Any, TextIO, TypeVar

from fastsketch.config import OutputFormat
from fastsketch.errors import FormatError

logger = logging.getLogger(__name__)

R = TypeVar("R")


# =============================================================================
# Record Types
# =============================================================================


@dataclass
class ResultRecord:
    """One similarity estimate next to the exact value."""

    method: str
    t: int
    seed: int
    estimate: float
    exact: float
    elapsed: float
    hash_evals: int
    set_a: str = ""
    set_b: str = ""
    b: int = 0


@dataclass
class SketchRecord:
    set_id: str
    method: str
    t: int
    seed: int
    hash_evals: int
    path: str


@dataclass
class HistogramRecord:
    """Frequency of the estimate matches / t for one method.

    degenerate counts trials whose sketch of A holds a single value; it
    repeats on every row of the method.
    """

    method: str
    label: str
    t: int
    matches: int
    estimate: float
    count: int
    frequency: float
    degenerate: int
    degenerate_frequency: float
    trials: int
    seed: int


@dataclass
class ConcentrationRecord:
    t: int
    j: str
    delta: str
    tail: str
    threshold: str
    trials: int
    hits: int
    frequency: float
    bound: float
    seed: int


@dataclass
class MomentRecord:
    t: int
    j: str
    k: int
    trials: int
    mean: float
    stderr: float
    lower: float
    upper: float
    seed: int


@dataclass
class BenchRecord:
    method: str
    label: str
    size: int
    t: int
    seeds: int
    mean_hash_evals: float
    mean_elapsed: float
    budget: float
    seed: int


@dataclass
class BuildRecord:
    n: int
    K: int
    L: int
    t: int
    t_sep: int
    rho: float
    gamma: float
    bucket_entries: int
    seed: int
    path: str


@dataclass
class QueryRecord:
    found: bool
    set_id: str | None
    jaccard: float | None
    matches: int
    branch: str
    separations: int
    exact_checks: int
    hash_evals: int
    seed: int


# =============================================================================
# Writing and Reading
# =============================================================================


def field_names(cls: type) -> list[str]:
    return [f.name for f in dataclasses.fields(cls)]


def write_records(
    cls: type[R], records: Iterable[R], fmt: OutputFormat, stream: TextIO
) -> int:
    """Write records of type cls; a CSV always gets its header. Returns the row count."""
    count = 0
    if fmt is OutputFormat.CSV:
        writer = csv.DictWriter(stream, fieldnames=field_names(cls), lineterminator="\n")
        writer.writeheader()
        for record in records:
            writer.writerow(dataclasses.asdict(record))
            count += 1
    else:
        for record in records:
            stream.write(json.dumps(dataclasses.asdict(record)) + "\n")
            count += 1
    return count


def _convert(raw: str, hint: Any) -> Any:
    args = typing.get_args(hint)
    if typing.get_origin(hint) in (typing.Union, types.UnionType):
        if raw == "" and type(None) in args:
            return None
        hint = next(a for a in args if a is not type(None))
    if hint is bool:
        if raw not in ("True", "False"):
            raise ValueError(f"not a boolean: {raw!r}")
        return raw == "True"
    if hint in (int, float):
        return hint(raw)
    return raw


def read_records(cls: type[R], lines: Sequence[str], fmt: OutputFormat) -> list[R]:
    """Parse records written by write_records."""
    hints = typing.get_type_hints(cls)
    records: list[R] = []
    if fmt is OutputFormat.CSV:
        reader = csv.DictReader(lines)
        if reader.fieldnames is not None and reader.fieldnames != field_names(cls):
            raise FormatError(f"unexpected CSV header {reader.fieldnames}", 1)
        for row in reader:
            try:
                values = {k: _convert(v, hints[k]) for k, v in row.items()}
            except (ValueError, KeyError, TypeError) as e:
                raise FormatError(f"bad CSV row: {e}", reader.line_num) from e
            records.append(cls(**values))
        return records

    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            records.append(cls(**json.loads(line)))
        except (ValueError, TypeError) as e:
            raise FormatError(f"bad JSON record: {e}", number) from e
    return records


__all__ = [
    "BenchRecord",
    "BuildRecord",
    "ConcentrationRecord",
    "HistogramRecord",
    "MomentRecord",
    "QueryRecord",
    "ResultRecord",
    "SketchRecord",
    "read_records",
    "write_records",
]
