"""Diagnostics raised by the verifier pipeline."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Span:
    line: int
    column: int
    end_line: int = 0
    end_column: int = 0

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


class SpecError(Exception):
    """Base class for every user-facing specification diagnostic."""

    def __init__(self, message: str, span: Span | None = None):
        self.message = message
        self.span = span
        super().__init__(f"{span}: {message}" if span else message)


class LexError(SpecError):
    pass


class ParseError(SpecError):
    def __init__(self, message: str, span: Span | None = None, expected: frozenset[str] = frozenset()):
        if expected:
            message = f"{message} (expected one of: {', '.join(sorted(expected))})"
        super().__init__(message, span)
        self.expected = expected


class UnsupportedSyntaxError(ParseError):
    """Syntax that belongs to the real-time extension of the language."""


class TypeCheckError(SpecError):
    pass


class DesugarError(SpecError):
    pass


class WellFormednessError(SpecError):
    def __init__(self, message: str, cycle: list[tuple[str, str, int]]):
        super().__init__(message)
        self.cycle = cycle


class EvaluationError(SpecError):
    def __init__(self, message: str, stream: str, position: int):
        super().__init__(f"{message} (stream {stream!r}, position {position})")
        self.stream = stream
        self.position = position


class TraceError(SpecError):
    pass
