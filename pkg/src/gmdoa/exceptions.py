"""Exception types shared across the package.

Validation failures (bad shapes, out-of-range parameters, malformed
configs) and numeric failures (non-finite quantities, degenerate
linear systems) are kept distinct so callers can map them to
different exit codes.
"""


class GmdoaError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(GmdoaError, ValueError):
    """Invalid input: shape, range, or config-field violations."""


class NumericError(GmdoaError, ArithmeticError):
    """A computation produced a non-finite or contract-violating value."""


class DegenerateGeometryError(NumericError):
    """A weighted Gram matrix stayed singular even after regularization.

    Carries ``snapshot`` (0-based snapshot index) when known.
    """

    def __init__(self, message: str, snapshot: int | None = None):
        super().__init__(message)
        self.snapshot = snapshot
