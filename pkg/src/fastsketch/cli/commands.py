#!/usr/bin/env python3
"""
Command handlers for the fastsketch command line.

Each handler takes the application and the parsed arguments, writes its
records and returns an exit code. Errors propagate to the application,
which maps them to exit codes.
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import sys
import time
from collections.abc import Iterator, Sequence
from fractions import Fraction
from pathlib import Path
from typing import TYPE_CHECKING, TextIO
from urllib.parse import quote

from fastsketch.baselines import (
    BaselineSketch,
    densify_optimal,
    densify_rotation,
    estimate_baseline,
    exact_jaccard,
    minhash_sketch,
    oph_sketch,
)
from fastsketch.cli.records import (
    BenchRecord,
    BuildRecord,
    ConcentrationRecord,
    HistogramRecord,
    MomentRecord,
    QueryRecord,
    ResultRecord,
    SketchRecord,
    write_records,
)
from fastsketch.config import CONCENTRATION_DELTAS_DEFAULT, METHOD_NAMES, ExitCode, Method
from fastsketch.errors import InvalidParameters
from fastsketch.formats import read_index, write_baseline, write_index, write_sketch
from fastsketch.hashing import Hasher, new_hasher
from fastsketch.lsh import build_index, query
from fastsketch.services import (
    CollectionReader,
    find_set,
    run_bench,
    run_concentration,
    run_histogram,
    run_moments,
)
from fastsketch.sketch import (
    dot_estimate,
    estimate_jaccard,
    featurize_bbit,
    fill_sketch,
)

if TYPE_CHECKING:
    from fastsketch.application import SketchApplication

logger = logging.getLogger(__name__)


@contextlib.contextmanager
def _output(path: Path | None) -> Iterator[TextIO]:
    """The --out file, or stdout."""
    if path is None:
        yield sys.stdout
        return
    with open(path, "w", encoding="utf-8", newline="") as f:
        yield f


def _reader(args: argparse.Namespace) -> CollectionReader:
    return CollectionReader(numeric=args.numeric, shingle=args.shingle)


def _build_baseline(
    method: Method, elements: Sequence[int], t: int, hasher: Hasher
) -> BaselineSketch:
    if method is Method.MINHASH:
        return minhash_sketch(elements, t, hasher)
    sketch = oph_sketch(elements, t, hasher)
    if method is Method.OPH_ROTATION:
        return densify_rotation(sketch, hasher)
    return densify_optimal(sketch, hasher)


# =============================================================================
# Sketching and Estimation
# =============================================================================


def cmd_sketch(
    app: SketchApplication,  # noqa: ARG001
    args: argparse.Namespace,
) -> ExitCode:
    """Write one binary sketch per set into the --out directory."""
    records = _reader(args).read(args.input)
    hasher = new_hasher(args.seed)
    args.out.mkdir(parents=True, exist_ok=True)

    rows: list[SketchRecord] = []
    for record in records:
        if args.method is Method.FAST:
            sketch = fill_sketch(record.elements, args.t, hasher)
            path = args.out / f"{quote(record.set_id, safe='')}.fsk"
            write_sketch(path, sketch)
        else:
            sketch = _build_baseline(args.method, record.elements, args.t, hasher)
            path = args.out / f"{quote(record.set_id, safe='')}.fskb"
            write_baseline(path, sketch)
        rows.append(
            SketchRecord(
                set_id=record.set_id,
                method=args.method.value,
                t=args.t,
                seed=args.seed,
                hash_evals=sketch.hash_evals,
                path=str(path),
            )
        )
    write_records(SketchRecord, rows, args.output_format, sys.stdout)
    return ExitCode.OK


def cmd_estimate(
    app: SketchApplication,  # noqa: ARG001
    args: argparse.Namespace,
) -> ExitCode:
    """Estimate J for two sets of a collection next to the exact value."""
    records = _reader(args).read(args.input)
    a = find_set(records, args.id_a).elements
    b = find_set(records, args.id_b).elements
    if args.b is not None and args.method is not Method.FAST:
        raise InvalidParameters("b-bit features are defined for the fast sketch only")

    hasher = new_hasher(args.seed)
    start = time.perf_counter()
    if args.method is Method.FAST:
        sa = fill_sketch(a, args.t, hasher)
        sb = fill_sketch(b, args.t, hasher)
        if args.b is None:
            estimate = estimate_jaccard(sa, sb)
        else:
            fa, fb = featurize_bbit(sa, args.b), featurize_bbit(sb, args.b)
            estimate = dot_estimate(fa, fb) / args.t
    else:
        sa = _build_baseline(args.method, a, args.t, hasher)
        sb = _build_baseline(args.method, b, args.t, hasher)
        estimate = estimate_baseline(sa, sb)
    elapsed = time.perf_counter() - start

    row = ResultRecord(
        method=args.method.value,
        t=args.t,
        seed=args.seed,
        estimate=estimate,
        exact=exact_jaccard(a, b),
        elapsed=elapsed,
        hash_evals=sa.hash_evals + sb.hash_evals,
        set_a=args.id_a,
        set_b=args.id_b,
        b=args.b or 0,
    )
    with _output(args.out) as stream:
        write_records(ResultRecord, [row], args.output_format, stream)
    return ExitCode.OK


# =============================================================================
# Experiments
# =============================================================================


def cmd_histogram(app: SketchApplication, args: argparse.Namespace) -> ExitCode:
    """Frequency of every estimate k/t per method, plot-ready."""
    histograms = run_histogram(args.t, args.trials, args.seed, app.runner(args.jobs))
    rows = [
        HistogramRecord(
            method=h.method.value,
            label=METHOD_NAMES[h.method],
            t=h.t,
            matches=k,
            estimate=k / h.t,
            count=count,
            frequency=count / h.trials if h.trials else 0.0,
            degenerate=h.degenerate,
            degenerate_frequency=h.degenerate_frequency,
            trials=h.trials,
            seed=args.seed,
        )
        for h in histograms
        for k, count in enumerate(h.counts)
        if args.trials
    ]
    with _output(args.out) as stream:
        write_records(HistogramRecord, rows, args.output_format, stream)
    return ExitCode.OK


def cmd_concentration(app: SketchApplication, args: argparse.Namespace) -> ExitCode:
    deltas = args.delta or [Fraction(d) for d in CONCENTRATION_DELTAS_DEFAULT]
    tails = run_concentration(
        args.t,
        args.j,
        deltas,
        args.trials,
        args.seed,
        app.runner(args.jobs),
        union_size=args.union_size,
    )
    rows = [
        ConcentrationRecord(
            t=args.t,
            j=str(args.j),
            delta=str(row.delta),
            tail=row.tail,
            threshold=str(row.threshold),
            trials=row.trials,
            hits=row.hits,
            frequency=row.frequency,
            bound=row.bound,
            seed=args.seed,
        )
        for row in tails
    ]
    with _output(args.out) as stream:
        write_records(ConcentrationRecord, rows, args.output_format, stream)
    return ExitCode.OK


def cmd_moments(app: SketchApplication, args: argparse.Namespace) -> ExitCode:
    result = run_moments(
        args.t,
        args.j,
        args.k,
        args.trials,
        args.seed,
        app.runner(args.jobs),
        union_size=args.union_size,
    )
    row = MomentRecord(
        t=result.t,
        j=str(result.j),
        k=result.k,
        trials=result.trials,
        mean=result.mean,
        stderr=result.stderr,
        lower=result.lower,
        upper=result.upper,
        seed=args.seed,
    )
    with _output(args.out) as stream:
        write_records(MomentRecord, [row], args.output_format, stream)
    return ExitCode.OK


def cmd_bench(
    app: SketchApplication,  # noqa: ARG001
    args: argparse.Namespace,
) -> ExitCode:
    methods = args.methods or [Method.FAST, Method.MINHASH]
    cells = run_bench(args.sizes, args.ts, args.seeds, args.seed, methods)
    rows = [
        BenchRecord(
            method=cell.method.value,
            label=METHOD_NAMES[cell.method],
            size=cell.size,
            t=cell.t,
            seeds=cell.seeds,
            mean_hash_evals=cell.mean_hash_evals,
            mean_elapsed=cell.mean_elapsed,
            budget=cell.budget,
            seed=args.seed,
        )
        for cell in cells
    ]
    with _output(args.out) as stream:
        write_records(BenchRecord, rows, args.output_format, stream)
    return ExitCode.OK


# =============================================================================
# Similarity Search
# =============================================================================


def cmd_lsh_build(
    app: SketchApplication,  # noqa: ARG001
    args: argparse.Namespace,
) -> ExitCode:
    records = _reader(args).read(args.input)
    index = build_index(
        ((r.set_id, r.elements) for r in records), args.j1, args.j2, args.seed
    )
    write_index(args.index, index)
    p = index.params
    row = BuildRecord(
        n=len(index),
        K=p.K,
        L=p.L,
        t=p.t,
        t_sep=p.t_sep,
        rho=p.rho,
        gamma=p.gamma,
        bucket_entries=index.bucket_entries,
        seed=args.seed,
        path=str(args.index),
    )
    with _output(args.out) as stream:
        write_records(BuildRecord, [row], args.output_format, stream)
    return ExitCode.OK


def cmd_lsh_query(
    app: SketchApplication,  # noqa: ARG001
    args: argparse.Namespace,
) -> ExitCode:
    """Print the matched id and exact Jaccard; exit 1 when nothing is found."""
    index = read_index(args.index)
    tokens = [part for token in args.tokens for part in token.split()]
    result = query(index, _reader(args).parse_tokens(tokens))
    row = QueryRecord(
        found=result.found,
        set_id=result.set_id,
        jaccard=result.jaccard,
        matches=result.matches,
        branch=result.branch,
        separations=result.separations,
        exact_checks=result.exact_checks,
        hash_evals=result.hash_evals,
        seed=index.seed,
    )
    with _output(args.out) as stream:
        write_records(QueryRecord, [row], args.output_format, stream)
    return ExitCode.OK if result.found else ExitCode.NOT_FOUND


COMMANDS = {
    "sketch": cmd_sketch,
    "estimate": cmd_estimate,
    "histogram": cmd_histogram,
    "concentration": cmd_concentration,
    "moments": cmd_moments,
    "bench": cmd_bench,
    "lsh-build": cmd_lsh_build,
    "lsh-query": cmd_lsh_query,
}

__all__ = ["COMMANDS"]
