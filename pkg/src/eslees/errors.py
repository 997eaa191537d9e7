"""Exception hierarchy shared by all modules."""


class EsleesError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(EsleesError, ValueError):
    """Invalid discretization parameters or run configuration."""


class FormatError(EsleesError, ValueError):
    """A mesh file could not be parsed."""


class NotClosed(EsleesError, ValueError):
    """The triangulation has a boundary edge."""


class NonManifold(EsleesError, ValueError):
    """An edge is shared by more than two triangles."""


class DegenerateElement(EsleesError, ValueError):
    """A triangle has (numerically) zero area."""


class DomainMismatch(EsleesError, ValueError):
    """A tensor field is not sampled on the discretization's point set."""


class MetricError(EsleesError, ValueError):
    """A metric or mass matrix is not positive definite."""


class DimensionError(EsleesError, ValueError):
    """A vector does not match the number of degrees of freedom."""


class DegenerateInput(EsleesError, ValueError):
    """A zero vector was passed where a nonzero one is required."""


class HypothesisError(EsleesError):
    """The curvature-type hypothesis ``max ratio <= -lambda2`` fails numerically."""


class NumericalFailure(EsleesError, RuntimeError):
    """The dense eigensolver did not converge."""


class NonConvergence(EsleesError, RuntimeError):
    """The Rayleigh quotient minimizer exhausted its iteration budget.

    The best iterate is kept so callers can still inspect it.
    """

    def __init__(self, message, value=None, vector=None, residual=None, iterations=None):
        super().__init__(message)
        self.value = value
        self.vector = vector
        self.residual = residual
        self.iterations = iterations
