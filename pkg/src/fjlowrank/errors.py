"""Exception hierarchy shared by all modules."""


class FJError(Exception):
    """Base class for errors raised by fjlowrank."""


class ParseError(FJError, ValueError):
    """Malformed input text. ``line`` is 1-based, or None if unknown."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(FJError, ValueError):
    """Input violates a documented precondition."""


class ConvergenceError(FJError, RuntimeError):
    """An iterative method stopped before reaching its target."""

    def __init__(self, message, residual=None, iterations=None):
        self.residual = residual
        self.iterations = iterations
        super().__init__(message)


class ConditioningError(FJError, ArithmeticError):
    """A small dense system was numerically singular."""
