"""Exception hierarchy shared by the clearing engine and its I/O layer."""

from __future__ import annotations


class MarketError(Exception):
    """Base class for every error raised by dpdmarket."""


class ValidationError(MarketError):
    """Input data violates a model invariant; ``report`` lists the findings."""

    def __init__(self, report):
        self.report = report
        super().__init__(str(report))


class SolveError(MarketError):
    """The LP behind a clearing did not reach a verified optimum."""

    def __init__(self, status: str, message: str = ""):
        self.status = status
        super().__init__(message or f"LP solve ended with status {status!r}")


class CaseFormatError(MarketError):
    """A case or config file could not be parsed.

    ``line`` is 1-based when known; ``field`` names the offending entry.
    """

    def __init__(self, message: str, *, path=None, line: int | None = None, field: str | None = None):
        self.path = path
        self.line = line
        self.field = field
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
