"""Shared exception types."""

from __future__ import annotations


class DataFormatError(ValueError):
    """A corpus, annotation, or model file failed to parse.

    Carries the 1-based line number of the offending record when known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DegenerateDataError(ValueError):
    """A statistic is undefined on this data (e.g. zero expected disagreement)."""
