"""Exception hierarchy.

Each family maps to one CLI exit code (see ``cli.EXIT_CODES``).
"""

from __future__ import annotations


class MMSpreadError(Exception):
    """Base class for every error raised by this package."""


# -- configuration -----------------------------------------------------------

class ConfigError(MMSpreadError):
    pass


class ValidationErrors(ConfigError):
    """All violations found in a configuration, not just the first."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class NonPositiveParameter(ConfigError, ValueError):
    pass


# -- data ----------------------------------------------------------------------

class DataError(MMSpreadError, ValueError):
    pass


class EmptyInput(DataError):
    pass


class MalformedRow(DataError):
    def __init__(self, row: int, reason: str):
        self.row = row
        self.reason = reason
        super().__init__(f"row {row}: {reason}")


class NonMonotonicTimestamp(DataError):
    def __init__(self, row: int, reason: str = "timestamp not strictly ascending"):
        self.row = row
        super().__init__(f"row {row}: {reason}")


class NonPositiveRate(DataError):
    pass


class NonPositiveAverage(DataError):
    pass


class NonPositiveVolume(DataError):
    pass


class InsufficientData(DataError):
    pass


class InsufficientHistory(DataError):
    pass


class EmptyWindow(DataError):
    pass


class ZeroGamma(DataError):
    pass


class OutOfOrderDay(DataError):
    pass


class NotWarmedUp(DataError):
    pass


class TimestampMismatch(DataError):
    pass


class NonPositiveBid(DataError):
    pass


# -- output --------------------------------------------------------------------

class ReportIOError(MMSpreadError, OSError):
    pass
