"""Exception types shared across the package."""


class DimensionError(ValueError):
    """An input vector or matrix has the wrong shape."""


class SingularMatrixError(ArithmeticError):
    """A matrix that must be invertible is (numerically) singular."""


class UnsupportedOperationError(RuntimeError):
    """The requested operation is not defined for the given input."""


class ConsistencyError(RuntimeError):
    """Two independent computations of the same quantity disagree."""


class DivergenceError(ArithmeticError):
    """An iteration produced a non-finite or exploding iterate.

    The partial trace recorded up to (and including) the offending
    iterate is available as ``trace``.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class DatasetError(ValueError):
    """A dataset file could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
