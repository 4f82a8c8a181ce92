"""Exception types shared across the package."""


class ConvergenceError(RuntimeError):
    """An iterative solver failed to reach its tolerance.

    Carries the last iterate and its residual so callers can inspect or
    restart from where the solver stopped.
    """

    def __init__(self, message, last_iterate=None, residual=None, iterations=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual
        self.iterations = iterations


class ParseError(ValueError):
    """A text or binary input could not be parsed. ``line`` is 1-based."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line
