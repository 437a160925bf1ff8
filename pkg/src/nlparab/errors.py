"""Exception types shared across the package."""


class NlparabError(Exception):
    """Base class for all package-specific errors."""


class SingularEvaluationError(NlparabError, ValueError):
    """Kernel evaluated on the diagonal x == y."""


class EllipticityError(NlparabError, ValueError):
    """Kernel parameters violate the two-sided comparability bounds."""


class DivergentTailError(NlparabError, ValueError):
    """Exterior data grows too fast for the far-field integrals to converge."""


class GeometryError(NlparabError, ValueError):
    """A cylinder, ball or time window does not fit the field's range."""


class EmptyIntersectionError(GeometryError):
    """A cylinder contains no grid nodes or stored time levels."""


class PreconditionError(NlparabError, ValueError):
    """A verification hypothesis (positivity, residual sign) fails on the data."""


class AnomalyError(NlparabError, RuntimeError):
    """An internally inconsistent verification state, e.g. zero denominator
    with a nonzero numerator."""


class UnsupportedKernelError(NlparabError, ValueError):
    """Operation requires a translation-invariant kernel family."""


class UnsupportedRegimeError(NlparabError, ValueError):
    """Parameters outside the regime an inequality is stated for."""


class UnsupportedDimensionError(NlparabError, ValueError):
    """Operation implemented for 1D only (2D support is partial)."""


class SupportLeakError(NlparabError, ValueError):
    """A test function's support leaks outside the grid or time range."""


class QuadratureBudgetError(NlparabError, RuntimeError):
    """Adaptive quadrature could not reach the tolerance within its
    subdivision budget.  Carries the best estimate produced so far."""

    def __init__(self, message, value, error_estimate):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate


class ConfigError(NlparabError, ValueError):
    """Run configuration file is malformed or out of admissible ranges."""


class SolverError(NlparabError, RuntimeError):
    """Linear solve inside the time stepper failed."""
