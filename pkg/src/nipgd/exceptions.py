"""Package-wide exception types."""

__all__ = ["ConvergenceError", "NonFiniteResidualError", "DegeneratePreconditionerError"]


class ConvergenceError(RuntimeError):
    """An iterative solve exhausted its budget before reaching tolerance.

    Carries the final residual norm and iteration count when available.
    """

    def __init__(self, message, residual_norm=None, iterations=None):
        super().__init__(message)
        self.residual_norm = residual_norm
        self.iterations = iterations


class NonFiniteResidualError(RuntimeError):
    """A residual evaluation produced NaN or Inf; the offending iterate is attached."""

    def __init__(self, message, iterate=None):
        super().__init__(message)
        self.iterate = iterate


class DegeneratePreconditionerError(RuntimeError):
    """A preconditioner quadratic form came out non-positive; the operator
    is not usable as an SPD scaling."""
