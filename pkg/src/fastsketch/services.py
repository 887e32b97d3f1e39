#!/usr/bin/env python3
"""
Services module for fastsketch.

Handles everything the commands share: collection-file parsing, the trial
runner with its seed fan-out, and the experiment drivers behind the
histogram, concentration, moments and bench commands.
"""

from __future__ import annotations

import logging
import time
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from pathlib import Path
from typing import TypeVar

import numpy as np

from fastsketch.baselines import (
    BaselineSketch,
    baseline_match_count,
    densify_optimal,
    densify_rotation,
    minhash_sketch,
    oph_sketch,
)
from fastsketch.bounds import (
    chernoff_lower,
    chernoff_upper,
    hash_eval_budget,
    moment_bounds,
)
from fastsketch.config import (
    CONCENTRATION_MAX_UNION,
    HASH_EVAL_CONSTANT,
    MASK64,
    TOKEN_SEED,
    Method,
)
from fastsketch.errors import (
    ContractViolation,
    DuplicateId,
    EmptyInput,
    InvalidParameters,
    ParseError,
)
from fastsketch.hashing import Hasher, new_hasher, shingles, tokenize
from fastsketch.sketch import fill_sketch, match_count, match_indicators

logger = logging.getLogger(__name__)

T = TypeVar("T")


# =============================================================================
# Collection Files
# =============================================================================


@dataclass
class SetRecord:
    """One parsed collection line."""

    set_id: str
    elements: list[int]
    line: int


class CollectionReader:
    """
    Parser for collection files: `<set-id><TAB><token> <token> ...` per line.

    Tokens are decimal 64-bit integers with ``numeric``, otherwise strings
    hashed with the fixed token seed (after optional w-word shingling).
    Blank lines are skipped.
    """

    def __init__(self, numeric: bool = False, shingle: int | None = None) -> None:
        if numeric and shingle is not None:
            raise InvalidParameters("shingling applies to string tokens only")
        if shingle is not None and shingle < 1:
            raise InvalidParameters(f"shingle width must be >= 1, got {shingle}")
        self.numeric = numeric
        self.shingle = shingle

    def parse_tokens(self, tokens: Sequence[str], line: int = 1) -> list[int]:
        """Turn the tokens of one line into element ids."""
        if self.numeric:
            elements = []
            for token in tokens:
                try:
                    value = int(token, 10)
                except ValueError:
                    raise ParseError(f"not a decimal integer: {token!r}", line) from None
                if not 0 <= value <= MASK64:
                    raise ParseError(f"integer out of 64-bit range: {token}", line)
                elements.append(value)
            return elements
        if self.shingle is not None:
            return [tokenize(s, TOKEN_SEED) for s in shingles(tokens, self.shingle)]
        return [tokenize(token, TOKEN_SEED) for token in tokens]

    def parse_line(self, text: str, line: int) -> SetRecord:
        set_id, tab, rest = text.rstrip("\r\n").partition("\t")
        if not tab:
            raise ParseError("expected <set-id><TAB><tokens>", line)
        if not set_id:
            raise ParseError("empty set id", line)
        tokens = rest.split()
        if not tokens:
            raise EmptyInput(f"line {line}: set {set_id!r} has no tokens")
        return SetRecord(set_id, self.parse_tokens(tokens, line), line)

    def read_lines(self, lines: Iterable[str | bytes]) -> list[SetRecord]:
        records: list[SetRecord] = []
        seen: dict[str, int] = {}
        for number, line in enumerate(lines, start=1):
            if isinstance(line, bytes):
                try:
                    text = line.decode("utf-8")
                except UnicodeDecodeError as e:
                    raise ParseError(f"invalid UTF-8 at byte {e.start}", number) from None
            else:
                text = line
            if not text.strip():
                continue
            record = self.parse_line(text, number)
            if record.set_id in seen:
                raise DuplicateId(
                    f"line {number}: set id {record.set_id!r} "
                    f"already used on line {seen[record.set_id]}"
                )
            seen[record.set_id] = number
            records.append(record)
        return records

    def read(self, path: Path) -> list[SetRecord]:
        """Parse a whole collection file."""
        with open(path, "rb") as f:
            records = self.read_lines(f)
        logger.info("Read %d sets from %s", len(records), path)
        return records


def find_set(records: Sequence[SetRecord], set_id: str) -> SetRecord:
    for record in records:
        if record.set_id == set_id:
            return record
    raise EmptyInput(f"no set with id {set_id!r} in the collection")


# =============================================================================
# Trial Runner
# =============================================================================


class TrialRunner:
    """
    Runs `fn(seed + i)` for i in [trials].

    With more than one job the trials go to a process pool; results always
    come back in trial order.
    """

    def __init__(self, jobs: int = 1) -> None:
        if jobs < 1:
            raise InvalidParameters(f"jobs must be >= 1, got {jobs}")
        self.jobs = jobs

    @staticmethod
    def trial_seeds(seed: int, trials: int) -> list[int]:
        return [(seed + i) & MASK64 for i in range(trials)]

    def map(self, fn: Callable[[int], T], seed: int, trials: int) -> list[T]:
        if trials < 0:
            raise InvalidParameters(f"trials must be >= 0, got {trials}")
        seeds = self.trial_seeds(seed, trials)
        if self.jobs == 1 or trials < 2:
            return [fn(s) for s in seeds]
        chunksize = max(1, trials // (self.jobs * 4))
        logger.debug("Running %d trials on %d processes", trials, self.jobs)
        with ProcessPoolExecutor(max_workers=self.jobs) as pool:
            return list(pool.map(fn, seeds, chunksize=chunksize))


# =============================================================================
# Sets with a Prescribed Jaccard Similarity
# =============================================================================


def jaccard_pair(
    j: Fraction | float, union_size: int | None = None
) -> tuple[list[int], list[int]]:
    """
    Two sets A, B with J(A, B) = j exactly: a shared core plus disjoint tails.

    With j = p/q in lowest terms the union size must be a multiple of q.
    """
    frac = Fraction(j).limit_denominator(CONCENTRATION_MAX_UNION)
    if not 0 <= frac <= 1:
        raise InvalidParameters(f"Jaccard similarity must be in [0, 1], got {j}")
    q = frac.denominator
    size = q if union_size is None else union_size
    if size < 1 or size % q:
        raise InvalidParameters(
            f"union size {size} cannot realise J = {frac}; use a multiple of {q}"
        )
    if size > CONCENTRATION_MAX_UNION:
        raise InvalidParameters(f"union size {size} exceeds {CONCENTRATION_MAX_UNION}")
    core = frac.numerator * (size // q)
    rest = size - core
    if core == 0 and rest < 2:
        raise InvalidParameters(f"union size {size} is too small for disjoint sets")
    tail_a = (rest + 1) // 2
    a = list(range(core + tail_a))
    b = list(range(core)) + list(range(core + tail_a, size))
    return a, b


# =============================================================================
# Per-Method Matching
# =============================================================================


@dataclass(frozen=True)
class PairOutcome:
    """Matches between the sketches of A and B under one method."""

    matches: int
    degenerate: bool
    hash_evals: int


def _densified(method: Method, sketch: BaselineSketch, hasher: Hasher) -> BaselineSketch:
    if method is Method.OPH_ROTATION:
        return densify_rotation(sketch, hasher)
    return densify_optimal(sketch, hasher)


def sketch_pair(
    method: Method, a: Sequence[int], b: Sequence[int], t: int, hasher: Hasher
) -> PairOutcome:
    """Sketch both sets with method; degenerate marks a single-value sketch of A."""
    if method is Method.FAST:
        sa = fill_sketch(a, t, hasher)
        sb = fill_sketch(b, t, hasher)
        return PairOutcome(
            match_count(sa, sb),
            len(set(sa.entries)) == 1,
            sa.hash_evals + sb.hash_evals,
        )
    if method is Method.MINHASH:
        ma = minhash_sketch(a, t, hasher)
        mb = minhash_sketch(b, t, hasher)
    else:
        ma = _densified(method, oph_sketch(a, t, hasher), hasher)
        mb = _densified(method, oph_sketch(b, t, hasher), hasher)
    return PairOutcome(
        baseline_match_count(ma, mb),
        ma.distinct_values == 1,
        ma.hash_evals + mb.hash_evals,
    )


# =============================================================================
# Histogram
# =============================================================================

HISTOGRAM_A = (1, 2)
HISTOGRAM_B = (2, 3)


@dataclass
class MethodHistogram:
    """Distribution of the match count X over trials for one method."""

    method: Method
    t: int
    counts: list[int]
    degenerate: int = 0

    @property
    def trials(self) -> int:
        return sum(self.counts)

    def _estimates(self) -> np.ndarray:
        return np.repeat(np.arange(self.t + 1) / self.t, self.counts)

    @property
    def mean(self) -> float:
        return float(self._estimates().mean()) if self.trials else 0.0

    @property
    def variance(self) -> float:
        return float(self._estimates().var(ddof=1)) if self.trials > 1 else 0.0

    @property
    def degenerate_frequency(self) -> float:
        return self.degenerate / self.trials if self.trials else 0.0


def histogram_trial(t: int, methods: Sequence[Method], seed: int) -> list[PairOutcome]:
    hasher = new_hasher(seed)
    return [sketch_pair(m, HISTOGRAM_A, HISTOGRAM_B, t, hasher) for m in methods]


def run_histogram(
    t: int,
    trials: int,
    seed: int,
    runner: TrialRunner,
    methods: Sequence[Method] = tuple(Method),
) -> list[MethodHistogram]:
    """Estimate distributions for A = {1, 2}, B = {2, 3} under every method."""
    outcomes = runner.map(partial(histogram_trial, t, tuple(methods)), seed, trials)
    histograms = [MethodHistogram(m, t, [0] * (t + 1)) for m in methods]
    for trial in outcomes:
        for histogram, outcome in zip(histograms, trial):
            histogram.counts[outcome.matches] += 1
            histogram.degenerate += outcome.degenerate
    for h in histograms:
        logger.info(
            "%s: mean %.4f variance %.5f degenerate %.4f",
            h.method.value,
            h.mean,
            h.variance,
            h.degenerate_frequency,
        )
    return histograms


# =============================================================================
# Concentration
# =============================================================================


@dataclass(frozen=True)
class TailFrequency:
    """Empirical tail frequency of X next to its closed-form bound."""

    delta: Fraction
    tail: str
    threshold: Fraction
    hits: int
    trials: int
    bound: float

    @property
    def frequency(self) -> float:
        return self.hits / self.trials if self.trials else 0.0


def match_count_trial(a: Sequence[int], b: Sequence[int], t: int, seed: int) -> int:
    hasher = new_hasher(seed)
    return match_count(fill_sketch(a, t, hasher), fill_sketch(b, t, hasher))


def tail_frequencies(
    counts: Sequence[int], t: int, j: Fraction, deltas: Sequence[Fraction]
) -> list[TailFrequency]:
    """Upper tails X >= tJ(1+delta) and, for delta <= 1, lower tails X <= tJ(1-delta)."""
    rows: list[TailFrequency] = []
    for delta in deltas:
        if delta <= 0:
            raise ContractViolation(f"delta must be positive, got {delta}")
        upper = t * j * (1 + delta)
        rows.append(
            TailFrequency(
                delta,
                "upper",
                upper,
                sum(1 for x in counts if x >= upper),
                len(counts),
                chernoff_upper(float(delta), float(t * j)),
            )
        )
        if delta <= 1:
            lower = t * j * (1 - delta)
            rows.append(
                TailFrequency(
                    delta,
                    "lower",
                    lower,
                    sum(1 for x in counts if x <= lower),
                    len(counts),
                    chernoff_lower(float(delta), float(t * j)),
                )
            )
    return rows


def run_concentration(
    t: int,
    j: Fraction,
    deltas: Sequence[Fraction],
    trials: int,
    seed: int,
    runner: TrialRunner,
    union_size: int | None = None,
) -> list[TailFrequency]:
    """Tail frequencies of X over trials for a pair with J(A, B) = j."""
    a, b = jaccard_pair(j, union_size)
    j = Fraction(j).limit_denominator(CONCENTRATION_MAX_UNION)
    if trials == 0:
        return []
    counts = runner.map(partial(match_count_trial, tuple(a), tuple(b), t), seed, trials)
    return tail_frequencies(counts, t, j, deltas)


# =============================================================================
# Moments
# =============================================================================


@dataclass(frozen=True)
class MomentEstimate:
    """Empirical E[X_0 ... X_{k-1}] against its sandwich."""

    t: int
    j: Fraction
    k: int
    trials: int
    mean: float
    stderr: float
    lower: float
    upper: float


def product_trial(a: Sequence[int], b: Sequence[int], t: int, k: int, seed: int) -> int:
    hasher = new_hasher(seed)
    indicators = match_indicators(fill_sketch(a, t, hasher), fill_sketch(b, t, hasher))
    return int(all(indicators[:k]))


def run_moments(
    t: int,
    j: Fraction,
    k: int,
    trials: int,
    seed: int,
    runner: TrialRunner,
    union_size: int | None = None,
) -> MomentEstimate:
    if not 1 <= k <= t:
        raise InvalidParameters(f"k must be in [1, t={t}], got {k}")
    if trials < 1:
        raise InvalidParameters("the moment experiment needs at least one trial")
    a, b = jaccard_pair(j, union_size)
    j = Fraction(j).limit_denominator(CONCENTRATION_MAX_UNION)
    products = np.asarray(
        runner.map(partial(product_trial, tuple(a), tuple(b), t, k), seed, trials),
        dtype=np.float64,
    )
    lower, upper = moment_bounds(float(j), t, k)
    stderr = float(products.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return MomentEstimate(
        t=t,
        j=j,
        k=k,
        trials=trials,
        mean=float(products.mean()),
        stderr=stderr,
        lower=lower,
        upper=upper,
    )


# =============================================================================
# Benchmark
# =============================================================================


@dataclass
class BenchCell:
    """Mean cost of sketching one random set of a given size."""

    method: Method
    size: int
    t: int
    seeds: int
    hash_evals: list[int] = field(default_factory=list)
    elapsed: list[float] = field(default_factory=list)

    @property
    def mean_hash_evals(self) -> float:
        return float(np.mean(self.hash_evals)) if self.hash_evals else 0.0

    @property
    def mean_elapsed(self) -> float:
        return float(np.mean(self.elapsed)) if self.elapsed else 0.0

    @property
    def budget(self) -> float:
        return hash_eval_budget(self.t, self.size, HASH_EVAL_CONSTANT)


def random_set(size: int, seed: int) -> list[int]:
    """size distinct 64-bit elements drawn with seed."""
    rng = np.random.default_rng(seed)
    elements: set[int] = set()
    while len(elements) < size:
        draw = rng.integers(0, MASK64, size=size - len(elements), dtype=np.uint64, endpoint=True)
        elements.update(draw.tolist())
    return sorted(elements)


def run_bench(
    sizes: Sequence[int],
    ts: Sequence[int],
    seeds: int,
    seed: int,
    methods: Sequence[Method] = (Method.FAST, Method.MINHASH),
) -> list[BenchCell]:
    """Hash evaluations and wall time per (method, |A|, t), averaged over seeds."""
    builders = {
        Method.FAST: fill_sketch,
        Method.MINHASH: minhash_sketch,
        Method.OPH_ROTATION: oph_sketch,
        Method.OPH_OPTIMAL: oph_sketch,
    }
    cells: list[BenchCell] = []
    for size in sizes:
        if size < 1:
            raise InvalidParameters(f"set sizes must be positive, got {size}")
        for t in ts:
            row = [BenchCell(m, size, t, seeds) for m in methods]
            for trial_seed in TrialRunner.trial_seeds(seed, seeds):
                elements = random_set(size, trial_seed)
                hasher = new_hasher(trial_seed)
                for cell in row:
                    start = time.perf_counter()
                    sketch = builders[cell.method](elements, t, hasher)
                    if cell.method in (Method.OPH_ROTATION, Method.OPH_OPTIMAL):
                        sketch = _densified(cell.method, sketch, hasher)
                    cell.elapsed.append(time.perf_counter() - start)
                    cell.hash_evals.append(sketch.hash_evals)
            for cell in row:
                logger.info(
                    "bench %s |A|=%d t=%d: %.1f hash evals",
                    cell.method.value,
                    size,
                    t,
                    cell.mean_hash_evals,
                )
            cells.extend(row)
    return cells


__all__ = [
    "BenchCell",
    "CollectionReader",
    "MethodHistogram",
    "MomentEstimate",
    "PairOutcome",
    "SetRecord",
    "TailFrequency",
    "TrialRunner",
    "find_set",
    "jaccard_pair",
    "random_set",
    "run_bench",
    "run_concentration",
    "run_histogram",
    "run_moments",
    "sketch_pair",
    "tail_frequencies",
]
