"""Exception hierarchy shared by the newtonlab modules."""

from __future__ import annotations


class NewtonLabError(Exception):
    """Base class for every error raised by this package."""


class OracleEvaluationError(NewtonLabError):
    """The objective oracle returned a non-finite value."""

    def __init__(self, x, what: str = "value"):
        self.x = x
        self.what = what
        super().__init__(f"non-finite {what} at x={list(map(float, x))}")


class NotSymmetricError(NewtonLabError, ValueError):
    pass


class NotPositiveDefiniteError(NewtonLabError):
    """Cholesky breakdown; ``order`` is the order of the failing leading minor."""

    def __init__(self, order: int):
        self.order = order
        super().__init__(f"matrix is not positive definite (leading minor of order {order})")


class DimensionMismatchError(NewtonLabError, ValueError):
    pass


class HessianNotPositiveDefiniteError(NewtonLabError):
    """The classical Newton direction does not exist at this point."""


class ConvexityViolationError(NewtonLabError):
    """The regularized Hessian failed to factor; the oracle is not convex here."""


class ZeroGradientOrDirectionError(NewtonLabError, ValueError):
    pass


class InternalConsistencyError(NewtonLabError):
    pass


class NonDescentError(NewtonLabError, ValueError):
    pass


class StepUnderflowError(NewtonLabError):
    pass


class MissingConstantsError(NewtonLabError, ValueError):
    pass


class EpsilonTooLargeError(NewtonLabError, ValueError):
    pass


class InvalidConstantsError(NewtonLabError, ValueError):
    pass


class VariantMismatchError(NewtonLabError, ValueError):
    pass


class UnsupportedProblemError(NewtonLabError, ValueError):
    pass


class UnknownProblemError(NewtonLabError, KeyError):
    def __str__(self) -> str:
        return self.args[0] if self.args else "unknown problem"


class SingularTransformError(NewtonLabError, ValueError):
    pass


class MalformedTraceError(NewtonLabError, ValueError):
    """A trace file could not be parsed back into a run."""
