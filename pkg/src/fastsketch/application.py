#!/usr/bin/env python3
"""
Application class for fastsketch.

Command dispatch with lazy service initialization and the mapping from
exceptions to exit codes.
"""

from __future__ import annotations

import logging
import sys
from collections.abc import Sequence

from fastsketch.cli import COMMANDS, build_parser
from fastsketch.config import CliSettings, ExitCode, load_settings
from fastsketch.errors import (
    ContractViolation,
    DuplicateId,
    EmptyInput,
    FormatError,
    IncompatibleSketches,
    InvalidParameters,
    SketchError,
)
from fastsketch.i18n import _
from fastsketch.services import TrialRunner

logger = logging.getLogger(__name__)

_USAGE_ERRORS = (ContractViolation, InvalidParameters)
_DATA_ERRORS = (FormatError, EmptyInput, DuplicateId, IncompatibleSketches, OSError)


class SketchApplication:
    """
    Main application class for fastsketch.

    Implements lazy service initialization and runs one command per call
    to ``run``.
    """

    def __init__(self, settings: CliSettings | None = None) -> None:
        """Initialize the application."""
        # Services (lazy-initialized)
        self._settings = settings
        self._runners: dict[int, TrialRunner] = {}

    @property
    def settings(self) -> CliSettings:
        """Lazy-loaded user defaults."""
        if self._settings is None:
            self._settings = load_settings()
        return self._settings

    def runner(self, jobs: int) -> TrialRunner:
        """Trial runner for the given number of worker processes."""
        if jobs not in self._runners:
            self._runners[jobs] = TrialRunner(jobs)
        return self._runners[jobs]

    def run(self, argv: Sequence[str]) -> int:
        """Parse argv (without the program name), run the command, return the exit code."""
        parser = build_parser(self.settings)
        try:
            args = parser.parse_args(list(argv))
        except SystemExit as e:
            # argparse exits 0 for --help/--version and 2 for usage errors
            return int(e.code) if isinstance(e.code, int) else ExitCode.USAGE

        handler = COMMANDS[args.command]
        logger.debug("Running command %s", args.command)
        try:
            code = handler(self, args)
        except _USAGE_ERRORS as e:
            self._report(_("usage error"), e)
            return ExitCode.USAGE
        except _DATA_ERRORS as e:
            self._report(_("data error"), e)
            return ExitCode.DATA
        except SketchError as e:
            self._report(_("error"), e)
            return ExitCode.DATA

        logger.debug("Command %s exited with code %d", args.command, code)
        return int(code)

    @staticmethod
    def _report(kind: str, error: Exception) -> None:
        logger.debug("Command failed", exc_info=error)
        print(f"fastsketch: {kind}: {error}", file=sys.stderr)


__all__ = ["SketchApplication"]
