"""Few-photon EIT and optical-switch simulation and fitting."""

__version__ = "0.1.0"

from .constants import Constants, default_constants, load_constants  # noqa: E402
from .errors import (GridTooSmallError, NumericalError, SingularFitError,  # noqa: E402
                     SingularParameterError, SlowSwitchError, UnderInformativeError,
                     ValidationError)
from .response import (MediumParams, analytic_group_delay, complex_response,  # noqa: E402
                       natural_line_transmission)
from .propagation import (PulseSpec, closed_form_transmission, propagate_pulse,  # noqa: E402
                          pulse_transmission, switch_threshold, transmission_spectrum)
from .photometry import Geometry, projected_threshold  # noqa: E402
from .fitting import Spectrum, fit_spectrum, synthesize_spectrum  # noqa: E402

__all__ = [
    "Constants", "default_constants", "load_constants",
    "SlowSwitchError", "ValidationError", "NumericalError", "SingularParameterError",
    "GridTooSmallError", "UnderInformativeError", "SingularFitError",
    "MediumParams", "complex_response", "natural_line_transmission", "analytic_group_delay",
    "PulseSpec", "pulse_transmission", "propagate_pulse", "transmission_spectrum",
    "closed_form_transmission", "switch_threshold",
    "Geometry", "projected_threshold",
    "Spectrum", "fit_spectrum", "synthesize_spectrum",
]
