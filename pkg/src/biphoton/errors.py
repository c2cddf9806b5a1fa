"""Exception hierarchy shared by the CLI, service, and core modules."""

from __future__ import annotations


class BiphotonError(Exception):
    """Base class for package-specific failures."""


class UsageError(BiphotonError):
    """Bad invocation: unknown flags, missing inputs, invalid parameter values."""


class DataError(BiphotonError):
    """Malformed or inconsistent input data (files, payloads, mixed config hashes)."""


class EventParseError(DataError):
    """Malformed event file; carries the file path and the byte offset of the fault."""

    def __init__(self, path: str, offset: int, message: str):
        self.path = str(path)
        self.offset = int(offset)
        self.message = message
        super().__init__(f"{self.path}: byte {self.offset}: {message}")


class NumericError(BiphotonError):
    """Numeric failure: empty histograms, zero denominators, degenerate spectra."""
