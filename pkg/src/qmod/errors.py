"""Exception types shared across qmod."""


class DomainError(ValueError):
    """A point or parameter lies outside the domain of an operation."""


class ValidationError(ValueError):
    """An input violates a documented invariant."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before meeting its tolerance."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
