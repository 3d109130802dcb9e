"""Exception types raised across the package."""


class ParameterError(ValueError):
    """An argument violates a documented precondition."""


class SolverError(RuntimeError):
    """The linear system could not be solved (e.g. insufficient supports)."""


class NumericError(ArithmeticError):
    """A computation produced non-finite values."""


class OptimizationAborted(RuntimeError):
    """A run failed part-way; ``history`` holds the epochs completed so far."""

    def __init__(self, message, history):
        super().__init__(message)
        self.history = history
