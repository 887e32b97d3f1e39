#!/usr/bin/env python3
"""Argument parser for the fastsketch command line."""

from __future__ import annotations

import argparse
from fractions import Fraction
from pathlib import Path

from fastsketch.config import (
    APP_DESCRIPTION,
    APP_NAME,
    APP_VERSION,
    BENCH_SEEDS_DEFAULT,
    BENCH_SIZES_DEFAULT,
    BENCH_TS_DEFAULT,
    CONCENTRATION_DELTAS_DEFAULT,
    JOBS_MAX,
    MASK64,
    MAX_T,
    TRIALS_MAX,
    CliSettings,
    Method,
    OutputFormat,
)
from fastsketch.i18n import _


def _bounded_int(low: int, high: int) -> type[int]:
    def parse(text: str) -> int:
        try:
            value = int(text, 0)
        except ValueError:
            raise argparse.ArgumentTypeError(_("not an integer: {}").format(text)) from None
        if not low <= value <= high:
            raise argparse.ArgumentTypeError(
                _("{} is outside [{}, {}]").format(value, low, high)
            )
        return value

    parse.__name__ = "integer"
    return parse  # type: ignore[return-value]


def _fraction(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(_("not a number: {}").format(text)) from None
    return value


def _probability(text: str) -> float:
    value = float(_fraction(text))
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(_("{} is outside (0, 1)").format(text))
    return value


def _int_list(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            _("expected comma-separated integers: {}").format(text)
        ) from None
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError(_("expected positive integers: {}").format(text))
    return values


_t = _bounded_int(1, MAX_T)
_seed = _bounded_int(0, MASK64)
_trials = _bounded_int(0, TRIALS_MAX)


def _add_common(
    parser: argparse.ArgumentParser,
    settings: CliSettings,
    seed: bool = True,
    out: bool = True,
) -> None:
    if seed:
        parser.add_argument(
            "--seed",
            type=_seed,
            default=settings.seed,
            help=_("master seed (default: %(default)s)"),
        )
    parser.add_argument(
        "--format",
        dest="output_format",
        type=OutputFormat,
        choices=list(OutputFormat),
        default=settings.output_format,
        metavar="{csv,json}",
        help=_("result format (default: %(default)s)"),
    )
    if out:
        parser.add_argument("--out", type=Path, help=_("output path (default: stdout)"))


def _add_t(parser: argparse.ArgumentParser, settings: CliSettings) -> None:
    parser.add_argument(
        "--t", type=_t, default=settings.t, help=_("sketch size (default: %(default)s)")
    )


def _add_trials(parser: argparse.ArgumentParser, settings: CliSettings) -> None:
    parser.add_argument(
        "--trials",
        type=_trials,
        default=settings.trials,
        help=_("number of trials; trial i uses seed + i (default: %(default)s)"),
    )
    parser.add_argument(
        "--jobs",
        type=_bounded_int(1, JOBS_MAX),
        default=settings.jobs,
        help=_("worker processes (default: %(default)s)"),
    )


def _add_tokens(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--numeric", action="store_true", help=_("tokens are decimal 64-bit integers")
    )
    parser.add_argument(
        "--shingle",
        type=_bounded_int(1, 1024),
        metavar="W",
        help=_("hash contiguous W-word shingles instead of single tokens"),
    )


def _add_method(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--method",
        type=Method,
        choices=list(Method),
        default=Method.FAST,
        metavar="{" + ",".join(m.value for m in Method) + "}",
        help=_("sketching method (default: fast)"),
    )


def _add_union_size(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--union-size",
        type=_bounded_int(1, 1_000_000),
        help=_("|A u B| of the constructed pair; a multiple of the denominator of J"),
    )


def build_parser(settings: CliSettings | None = None) -> argparse.ArgumentParser:
    """Build the fastsketch parser; settings supply the defaults."""
    settings = settings or CliSettings()
    parser = argparse.ArgumentParser(prog=APP_NAME, description=APP_DESCRIPTION)
    parser.add_argument("--version", action="version", version=f"%(prog)s {APP_VERSION}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("sketch", help=_("sketch every set of a collection file"))
    p.add_argument("input", type=Path, help=_("collection file"))
    _add_t(p, settings)
    _add_common(p, settings, out=False)
    _add_tokens(p)
    _add_method(p)
    p.add_argument(
        "--out",
        type=Path,
        required=True,
        help=_("directory receiving one binary sketch per set"),
    )

    p = sub.add_parser("estimate", help=_("estimate J for two sets of a collection"))
    p.add_argument("input", type=Path, help=_("collection file"))
    p.add_argument("id_a", help=_("first set id"))
    p.add_argument("id_b", help=_("second set id"))
    _add_t(p, settings)
    _add_common(p, settings)
    _add_tokens(p)
    _add_method(p)
    p.add_argument(
        "--b",
        type=_bounded_int(1, 16),
        nargs="?",
        const=settings.b,
        help=_("estimate through b-bit features, fast method only (bare flag: b=%(const)s)"),
    )

    p = sub.add_parser("histogram", help=_("estimate distribution for A={1,2}, B={2,3}"))
    _add_t(p, settings)
    _add_trials(p, settings)
    _add_common(p, settings)

    p = sub.add_parser("concentration", help=_("tail frequencies against Chernoff bounds"))
    _add_t(p, settings)
    _add_trials(p, settings)
    _add_common(p, settings)
    p.add_argument("--j", type=_fraction, required=True, help=_("target Jaccard, e.g. 1/3"))
    p.add_argument(
        "--delta",
        type=_fraction,
        action="append",
        help=_("relative deviation; repeatable (default: {})").format(
            ", ".join(str(d) for d in CONCENTRATION_DELTAS_DEFAULT)
        ),
    )
    _add_union_size(p)

    p = sub.add_parser("moments", help=_("E[X_0 ... X_k-1] against its sandwich"))
    _add_t(p, settings)
    _add_trials(p, settings)
    _add_common(p, settings)
    p.add_argument("--j", type=_fraction, required=True, help=_("target Jaccard, e.g. 1/2"))
    p.add_argument("--k", type=_bounded_int(1, MAX_T), default=2, help=_("moment order"))
    _add_union_size(p)

    p = sub.add_parser("bench", help=_("hash evaluations and time, fast sketch vs MinHash"))
    _add_common(p, settings)
    p.add_argument(
        "--sizes",
        type=_int_list,
        default=BENCH_SIZES_DEFAULT,
        help=_("comma-separated set sizes"),
    )
    p.add_argument(
        "--ts", type=_int_list, default=BENCH_TS_DEFAULT, help=_("comma-separated t values")
    )
    p.add_argument(
        "--seeds",
        type=_bounded_int(1, TRIALS_MAX),
        default=BENCH_SEEDS_DEFAULT,
        help=_("seeds per cell (default: %(default)s)"),
    )
    p.add_argument(
        "--method",
        type=Method,
        choices=list(Method),
        action="append",
        dest="methods",
        metavar="METHOD",
        help=_("method to time; repeatable (default: fast and minhash)"),
    )

    p = sub.add_parser("lsh-build", help=_("build a similarity search index"))
    p.add_argument("input", type=Path, help=_("collection file"))
    p.add_argument("index", type=Path, help=_("index file to write"))
    p.add_argument("--j1", type=_probability, default=settings.j1, help=_("near threshold"))
    p.add_argument("--j2", type=_probability, default=settings.j2, help=_("far threshold"))
    _add_common(p, settings)
    _add_tokens(p)

    p = sub.add_parser("lsh-query", help=_("query an index with one set of tokens"))
    p.add_argument("index", type=Path, help=_("index file"))
    p.add_argument("tokens", nargs="+", help=_("query tokens"))
    _add_common(p, settings, seed=False)
    _add_tokens(p)

    return parser


__all__ = ["build_parser"]
