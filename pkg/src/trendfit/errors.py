"""Exception types shared across the package."""


class InvalidGridError(ValueError):
    """Quantile grid cannot be constructed (too few points, bad probabilities)."""


class EstimationError(ValueError):
    """Quantile estimation received unusable samples."""


class GridMismatchError(ValueError):
    """Two quantile functions do not live on the same grid."""


class CoverageError(ValueError):
    """Some level in 1..L has no observation."""


class PreconditionError(ValueError):
    """An operation's input violates a documented precondition."""


class DegenerateDataError(ValueError):
    """The data admit no meaningful test (e.g. fewer than two distinct levels)."""


class UnsupportedError(ValueError):
    """The operation is defined only for a restricted input shape."""


class SchemaError(ValueError):
    """A delimited input file does not match the expected schema."""

    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class ConvergenceError(RuntimeError):
    """Alternating projections hit the iteration cap; carries the last iterate."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate
