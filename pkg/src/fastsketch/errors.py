"""
Exception hierarchy for fastsketch.

Library code raises these; the application layer maps them to exit codes.
"""

from __future__ import annotations


class SketchError(Exception):
    """Base exception for all fastsketch errors."""


class ContractViolation(SketchError, ValueError):
    """Raised when an argument is outside the documented domain of an operation."""


class EmptyInput(SketchError):
    """Raised when a set, sketch or collection line is empty where content is required."""


class IncompatibleSketches(SketchError):
    """Raised when sketches or feature vectors differ in size, seed or shape."""


class InvalidParameters(SketchError):
    """Raised when derived parameters cannot be formed (e.g. j2 >= j1)."""


class DuplicateId(SketchError):
    """Raised when a collection holds the same set id twice."""


class FormatError(SketchError):
    """Raised when a binary file or text input cannot be decoded.

    ``offset`` is the byte offset (binary files) or 1-based line number
    (text files) where decoding failed.
    """

    def __init__(self, message: str, offset: int | None = None) -> None:
        self.offset = offset
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)


class ParseError(FormatError):
    """Raised for malformed collection-file lines."""

    def __init__(self, message: str, line: int) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}")
        self.offset = line


__all__ = [
    "ContractViolation",
    "DuplicateId",
    "EmptyInput",
    "FormatError",
    "IncompatibleSketches",
    "InvalidParameters",
    "ParseError",
    "SketchError",
]
