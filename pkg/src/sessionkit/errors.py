"""Exception types raised by sessionkit operations."""

from __future__ import annotations


class SessionKitError(Exception):
    """Base class for all sessionkit errors."""


class MalformedLine(SessionKitError, ValueError):
    """A log line that cannot be parsed (too few fields or bad timestamp)."""

    def __init__(self, message: str, line_no: int | None = None):
        super().__init__(message)
        self.line_no = line_no


class DomainError(SessionKitError, ValueError):
    """A value outside its valid domain (e.g. seconds-of-day not in [0, 86400))."""


class EmptyGraph(SessionKitError, ValueError):
    """Modularity requested on a graph without edges."""


class EmptyProfile(SessionKitError, ValueError):
    """A user has no clusters to build a temporal profile from."""


class NoClusters(SessionKitError, ValueError):
    """All of a user's clusters were filtered out before computing a metric."""


class DegenerateInput(SessionKitError, ValueError):
    """Regression input with zero predictor variance or too few rows."""


class Ineligible(SessionKitError, ValueError):
    """User does not meet the activity criteria for a per-user analysis."""


class InvalidSpec(SessionKitError, ValueError):
    """An archetype or planted-graph description violates its own constraints."""
