"""Error types shared across the package.

Every failure surfaced to callers is one of these, so the CLI can map
exceptions to exit codes without inspecting messages.
"""


class TiersimError(Exception):
    """Base class for all package errors."""

    code = "INTERNAL_ERROR"


class ScenarioSyntaxError(TiersimError):
    """Input text could not be parsed at all (bad JSON, bad step line).

    Carries the source position when one is known.
    """

    code = "SYNTAX_ERROR"

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}: {message}" if column is None else f"line {line}, column {column}: {message}"
        super().__init__(message)


class ValidationError(TiersimError):
    """Structurally parseable input that violates a model invariant."""

    code = "VALIDATION_ERROR"


class DomainError(TiersimError):
    """Numeric argument outside the mathematically valid domain."""

    code = "DOMAIN_ERROR"


class SeriesDisabledError(TiersimError):
    """Series export requested from a run that did not record series data."""

    code = "SERIES_DISABLED"


class EngineEmptyError(TiersimError):
    """step() called on a simulation whose event list is exhausted."""

    code = "EMPTY"


class InternalError(TiersimError):
    """Invariant broken inside the package itself; always a bug."""

    code = "INTERNAL_ERROR"
