"""Command-line surface of fastsketch: parser, handlers and result records."""

from fastsketch.cli.commands import COMMANDS
from fastsketch.cli.parser import build_parser

__all__ = ["COMMANDS", "build_parser"]
