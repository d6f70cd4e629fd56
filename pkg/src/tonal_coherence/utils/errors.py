"""
Exception hierarchy for the tonal-coherence package.

Every error raised on purpose by the library derives from TonalCoherenceError,
so callers (the CLI in particular) can map whole families of failures to
exit codes without catching unrelated exceptions.
"""

from __future__ import annotations

from typing import Optional


class TonalCoherenceError(Exception):
    """Base class for all package errors."""


class ConfigurationError(TonalCoherenceError):
    """Raised when configuration values are missing or invalid."""


class LofRangeError(TonalCoherenceError, ValueError):
    """A line-of-fifths index or chromatic pitch class is out of range."""


class EmptyInputError(TonalCoherenceError):
    """A distribution or piece has no usable pitch content."""


class DegenerateProfileError(TonalCoherenceError):
    """A chromatic profile is constant, so Pearson correlation is undefined."""


class DegenerateWeightsError(TonalCoherenceError):
    """An interval weight vector has zero total mass."""


class DiffusionOverflowError(TonalCoherenceError):
    """Too little model mass stays inside the 35-position window."""


class FitFailureError(TonalCoherenceError):
    """No optimizer start produced a finite likelihood."""


class InsufficientDataError(TonalCoherenceError):
    """A corpus-level statistic needs more passing pieces than available."""


class MidiParseError(TonalCoherenceError):
    """Malformed Standard MIDI File."""

    def __init__(self, message: str, offset: Optional[int] = None) -> None:
        self.offset = offset
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)


class NotesTableError(TonalCoherenceError):
    """Malformed row or header in a notes table."""

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnsupportedFormatError(TonalCoherenceError):
    """Input file extension is not a supported piece format."""
