"""Exception types shared across the package."""


class CapacityError(ValueError):
    """Raised when an exhaustive computation would exceed its size limit."""


class SolverError(ArithmeticError):
    """Raised when the logistic solver hits a non-finite objective."""

    def __init__(self, message, iteration=None, player=None):
        super().__init__(message)
        self.iteration = iteration
        self.player = player


class ConsistencyError(RuntimeError):
    """An internal construction produced an object violating its invariants."""
