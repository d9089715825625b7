"""Exception hierarchy shared by all modules."""


class WeinstockLabError(Exception):
    """Base class for every error raised by the package."""


class InputError(WeinstockLabError):
    """Invalid or degenerate input data."""


class NumericError(WeinstockLabError):
    """A numerical routine failed to deliver a trustworthy result."""


class FewerThanThreeHullVertices(InputError):
    pass


class DegenerateInput(InputError):
    pass


class NotConvex(InputError):
    pass


class NotPositive(InputError):
    pass


class InvalidBody(InputError):
    pass


class DimensionUnsupported(InputError):
    pass


class CurvatureUnavailable(InputError):
    pass


class InsufficientSamples(InputError):
    pass


class CutMissesBody(InputError):
    pass


class CutThroughOrigin(InputError):
    pass


class NegativeBeta(InputError):
    pass


class UnknownTarget(InputError):
    pass


class BadConfig(InputError):
    pass


class QuadratureFailure(NumericError):
    pass


class SolverFailure(NumericError):
    pass


class NoDescentFound(NumericError):
    """No cut in the sweep lowered the functional (the body is close to a centered ball)."""
