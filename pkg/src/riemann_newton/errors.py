"""Exception hierarchy shared by the geometry, field and solver layers."""


class ManifoldError(Exception):
    """Base class for all errors raised by this package."""


class BasePointError(ManifoldError):
    """A tangent vector does not live in the tangent space it was used in."""


class NotOnManifoldError(ManifoldError):
    """A point fails the membership predicate of its manifold."""


class InjectivityError(ManifoldError):
    """The requested pair of points lies outside the injectivity ball."""


class SingularOperatorError(ManifoldError):
    """A tangent operator is numerically singular.

    Attributes
    ----------
    condition : float
        Condition-number estimate of the offending operator.
    """

    def __init__(self, message, condition=float("inf")):
        super().__init__(message)
        self.condition = condition


class DomainError(ManifoldError):
    """A vector field was evaluated outside its domain."""


class UndefinedResidualError(ManifoldError):
    """The first-order expansion residual is undefined at the base point."""


class ChartExitError(ManifoldError):
    """A numerically integrated curve left the chart domain."""


class NonConvergenceError(ManifoldError):
    """An inner iterative procedure (ODE integration, shooting) failed."""
