"""Exception types shared across the package."""


class DimensionMismatchError(ValueError):
    """Field/grid component or length mismatch."""


class EllipticityError(ValueError):
    """Symmetrized dispersion matrix is not uniformly positive definite."""


class AssumptionFailureError(ValueError):
    """A sampled coefficient bound is unbounded or an assumption fails."""


class EvaluationError(ValueError):
    """Coefficient evaluator returned non-finite output."""


class BlowupError(RuntimeError):
    """Time stepping produced NaN/overflow; carries the failing step index."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class NonContractionError(RuntimeError):
    """Fixed-point iteration stopped contracting."""


class DecompositionError(RuntimeError):
    """Differentiated-system residual identity failed."""


class DomainExitError(ValueError):
    """A characteristic line left the periodic box."""


class InsufficientDataError(ValueError):
    """Too few samples for a finite-difference or fit operation."""


class InconclusiveRateError(RuntimeError):
    """Log-log fit residual too large to trust the slope."""


class UsageError(ValueError):
    """Bad CLI flag or config value."""
