"""Exception types raised across curvlab."""


class CurvlabError(Exception):
    """Base class for every error raised by this package."""


class ExprSyntaxError(CurvlabError):
    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class UnknownIdentifierError(ExprSyntaxError):
    pass


class CoordinateRangeError(ExprSyntaxError):
    pass


class EvaluationError(CurvlabError):
    """Raised when an expression cannot be evaluated at a point."""


class UnboundParameterError(EvaluationError):
    pass


class DegenerateMetricError(CurvlabError):
    pass


class DomainError(CurvlabError):
    """The evaluation point violates the chart's domain predicate."""


class ModelError(CurvlabError):
    pass


class NotEinsteinError(ModelError):
    pass


class NotSelfAdjointError(CurvlabError):
    pass


class IndeterminateVerdictError(CurvlabError):
    """A residual fell between the pass tolerance and the fail threshold."""

    def __init__(self, name, residual, tol, fail_threshold):
        super().__init__(
            f"{name}: residual {residual:.3e} lies in the dead zone "
            f"({tol:.1e}, {fail_threshold:.1e})"
        )
        self.name = name
        self.residual = residual
        self.tol = tol
        self.fail_threshold = fail_threshold


class ConfigError(CurvlabError):
    pass
