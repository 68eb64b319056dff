"""Exception types raised across the package."""


class ModsigError(Exception):
    """Base class for all errors raised by modsig."""


class GraphError(ModsigError, ValueError):
    """Malformed graph input: self-loops, bad weights, empty graphs."""


class ParseError(GraphError):
    """Input file could not be parsed.

    ``line`` is the 1-based line number of the offending record when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ModelError(ModsigError, ValueError):
    """The edge model cannot be evaluated or fitted on the given data."""


class ConvergenceError(ModelError):
    """A likelihood maximisation failed to converge."""


class DegenerateTestError(ModsigError):
    """The assignment leaves the modularity statistic with zero variance.

    Raised for a single group and for all-singleton groups, where the
    normal approximation is undefined.
    """
