"""Exception types shared across the package.

Everything derives from ValueError so callers that only care about
"bad input" can catch one thing; the subclasses exist so tests and the
CLI can tell the failure modes apart.
"""


class PolymacError(ValueError):
    """Base class for all package-specific errors."""


class ParameterMismatchError(PolymacError):
    """Operands live in different rings (n or q differ)."""


class UnsupportedShapeError(PolymacError):
    """An algorithm needs a power-of-two degree and did not get one."""


class TextFormatError(PolymacError):
    """Malformed polynomial text input; carries a 1-based line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InvalidPlanError(PolymacError):
    """Block plan dimensions are not powers of two or do not divide n."""


class RnsRangeError(PolymacError):
    """Value outside [0, M) handed to a residue conversion."""


class BaseTooSmallError(PolymacError):
    """No coprime base under the word size can reach the required product."""


class UnsupportedParametersError(PolymacError):
    """Ring parameters do not admit the requested transform."""


class EngineOverflowError(PolymacError):
    """A dispatch would overflow the configured accumulator width."""


class ConfigurationError(PolymacError):
    """A pipeline configuration invariant cannot be satisfied."""
