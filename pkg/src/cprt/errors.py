"""Exception hierarchy for the analyzer.

Exit-code mapping used by the CLI: ParseError/ValidationError -> 1,
PrecisionError (and SingularSystemError) -> 2, I/O -> 3, failed checks -> 4.
"""


class CprtError(Exception):
    """Base class for all analyzer errors."""


class ParseError(CprtError):
    """Source text does not conform to the program grammar.

    Carries the 1-based position and the token class that was expected.
    """

    def __init__(self, message, line, col, expected=None):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col
        self.expected = expected


class ValidationError(CprtError):
    """A structural invariant of a program is violated (names the invariant)."""


class NotPastError(CprtError):
    """Operation requires a positively almost-surely terminating program."""


class PrecisionError(CprtError):
    """Numeric result is ambiguous at the configured working precision."""


class SingularSystemError(PrecisionError):
    """Boundary system is numerically singular; signals a precision failure."""


class InternalError(CprtError):
    """An invariant the algorithm guarantees was violated (root count et al.)."""


class ResourceError(CprtError):
    """A configured resource limit (iteration window, ...) was exceeded."""
