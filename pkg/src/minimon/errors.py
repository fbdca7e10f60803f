"""Exception types shared across the package."""

from __future__ import annotations


class MinimonError(Exception):
    """Base class for all package errors."""


class ChartParseError(MinimonError):
    """Type-chart document is malformed; carries position when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + loc)
        self.line = line
        self.column = column


class ChartInvariantError(MinimonError):
    """Type-chart document parsed but violates an invariant."""

    def __init__(self, message: str, bad_entries: list[str] | None = None):
        if bad_entries:
            message = f"{message}: {'; '.join(bad_entries)}"
        super().__init__(message)
        self.bad_entries = bad_entries or []


class UnknownTypeError(MinimonError):
    """A type name is not in the chart's declared type set."""


class RosterError(MinimonError):
    """Roster document is structurally unusable."""


class IllegalActionError(MinimonError):
    """An action was submitted that is not legal for the acting side."""

    def __init__(self, side: str, reason: str):
        super().__init__(f"side {side}: {reason}")
        self.side = side
        self.reason = reason


class BattleFinishedError(MinimonError):
    """An operation requires an unfinished battle."""


class ParseFailure(MinimonError):
    """Model output could not be turned into a usable value.

    ``diagnostics`` carries per-element detail for array payloads and
    ``salvaged`` the elements that did parse, so callers can keep partial
    results after their retry budget runs out.
    """

    def __init__(self, reason: str, diagnostics: list[str] | None = None, salvaged: list | None = None):
        super().__init__(reason)
        self.reason = reason
        self.diagnostics = diagnostics or []
        self.salvaged = salvaged or []


class GatewayError(MinimonError):
    """Base class for provider call failures."""


class TransportError(GatewayError):
    pass


class RateLimitError(GatewayError):
    def __init__(self, message: str = "rate limited", retry_after: float | None = None):
        super().__init__(message)
        self.retry_after = retry_after


class AuthError(GatewayError):
    pass


class JudgeFailure(MinimonError):
    """The judge model never produced a parseable verdict."""
