"""Exception types raised by the simulator."""


class SlowSwitchError(Exception):
    """Base class for all package errors."""


class ValidationError(SlowSwitchError, ValueError):
    """Invalid parameters, configuration or input data."""


class NumericalError(SlowSwitchError, ArithmeticError):
    """A numerical procedure failed (quadrature, grids, solvers)."""


class SingularParameterError(NumericalError):
    """The response denominator vanished exactly (undamped degenerate medium)."""


class GridTooSmallError(NumericalError):
    """Output energy reached the edge of the FFT grid (aliasing)."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not reach the requested tolerance."""


class DelayExtractionError(NumericalError):
    """Envelope is flat or has no single dominant peak."""


class UnderInformativeError(ValidationError):
    """Spectrum carries no usable lineshape information."""


class SingularFitError(NumericalError):
    """Normal equations are rank deficient.

    ``direction`` holds the (log-space) parameter combination that the data
    do not constrain.
    """

    def __init__(self, message, direction=None, names=None):
        super().__init__(message)
        self.direction = direction
        self.names = names
