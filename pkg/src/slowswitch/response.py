"""Frequency-dependent probe response of the four-level N scheme.

Levels: |1>, |2> ground states, |3> probe excited state (|1>-|3> probe,
|2>-|3> control), |4> reached from |2> by the switch field.  With
``dij = delta_p + i*gamma_ij`` the dimensionless response is

    f = gamma13 (|Os|^2 - 4 d12 d24) / (d24 (4 d12 d13 - |Oc|^2) - d13 |Os|^2)

and a field travelling through optical depth OD picks up ``exp(i OD f / 2)``,
so intensity transmission is ``exp(-OD Im f)``.  Everything is SI with
angular frequencies (rad/s).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .errors import SingularParameterError, ValidationError

# Ratio between the propagated EIT delay and OD*gamma13/|Oc|^2.  Near the
# transparency point f ~ 4 gamma13 delta / Oc^2, and the phase OD f / 2 then
# has slope 2 OD gamma13 / Oc^2.
DEFAULT_DELAY_KAPPA = 2.0


def _check_finite(**values):
    for name, value in values.items():
        if not np.all(np.isfinite(value)):
            raise ValidationError(f"{name} must be finite")


@dataclass(frozen=True)
class MediumParams:
    """Arguments of the response function.

    Rates in rad/s, Rabi frequencies squared in rad^2/s^2.
    """

    od: float
    gamma13: float
    gamma12: float = 0.0
    gamma24: float | None = None
    rabi_c_sq: float = 0.0
    rabi_s_sq: float = 0.0

    def __post_init__(self):
        if self.gamma24 is None:
            object.__setattr__(self, "gamma24", self.gamma13)
        values = dict(od=self.od, gamma13=self.gamma13, gamma12=self.gamma12,
                      gamma24=self.gamma24, rabi_c_sq=self.rabi_c_sq, rabi_s_sq=self.rabi_s_sq)
        for name, value in values.items():
            if not math.isfinite(value):
                raise ValidationError(f"MediumParams.{name} must be finite, got {value!r}")
            if value < 0:
                raise ValidationError(f"MediumParams.{name} must be >= 0, got {value!r}")
        if self.od > 0 and self.gamma13 <= 0:
            raise ValidationError("gamma13 must be > 0 for an absorbing medium (od > 0)")

    @classmethod
    def two_level(cls, od, gamma13):
        # gamma12 only enters through factors that cancel when Oc = Os = 0;
        # a nonzero value keeps the closed form away from 0/0 at resonance.
        return cls(od=od, gamma13=gamma13, gamma12=gamma13, gamma24=gamma13)

    def with_(self, **changes) -> MediumParams:
        return replace(self, **changes)


@dataclass(frozen=True)
class TransitionParams:
    gamma_e: float
    wavelength: float
    strength_factor: float = 1.0
    dipole_ratio: float = 1.0

    def __post_init__(self):
        if not (self.gamma_e > 0 and math.isfinite(self.gamma_e)):
            raise ValidationError(f"gamma_e must be > 0, got {self.gamma_e!r}")
        if not (self.wavelength > 0 and math.isfinite(self.wavelength)):
            raise ValidationError(f"wavelength must be > 0, got {self.wavelength!r}")
        if not 0 < self.strength_factor <= 1:
            raise ValidationError(f"strength_factor must lie in (0, 1], got {self.strength_factor!r}")
        if not self.dipole_ratio >= 0:
            raise ValidationError(f"dipole_ratio must be >= 0, got {self.dipole_ratio!r}")

    @property
    def gamma13(self):
        return 0.5 * self.gamma_e


def natural_line_transmission(delta_p, od, gamma_e):
    """exp(-od / (1 + 4 (delta_p/gamma_e)^2)), the Lorentzian absorption profile."""
    _check_finite(delta_p=delta_p, od=od, gamma_e=gamma_e)
    if np.any(np.asarray(gamma_e) <= 0):
        raise ValidationError("gamma_e must be > 0")
    if np.any(np.asarray(od) < 0):
        raise ValidationError("od must be >= 0")
    x = np.asarray(delta_p, dtype=float) / gamma_e
    out = np.exp(-np.asarray(od, dtype=float) / (1.0 + 4.0 * x * x))
    return out if out.ndim else float(out)


def complex_response(omega, delta_probe, m: MediumParams):
    """Response f at sideband ``omega`` of a carrier detuned by ``delta_probe``.

    Accepts scalars or arrays for ``omega``.
    """
    _check_finite(omega=omega, delta_probe=delta_probe)
    delta = np.asarray(omega, dtype=float) + delta_probe
    f = kernels.response(delta, m.gamma13, m.gamma12, m.gamma24, m.rabi_c_sq, m.rabi_s_sq)
    if np.any(np.isnan(f)):
        raise SingularParameterError(
            "response denominator is exactly zero; the medium needs nonzero damping "
            f"at this detuning ({m})")
    return f if f.ndim else complex(f)


def cw_resonant_transmission(m: MediumParams, delta_probe=0.0):
    """Monochromatic transmission exp(-od Im f), the long-pulse limit."""
    f = complex_response(0.0, delta_probe, m)
    return math.exp(-m.od * f.imag)


def analytic_group_delay(m: MediumParams, kappa=DEFAULT_DELAY_KAPPA, *, ideal_only=True):
    """EIT group delay ``kappa * od * gamma13 / |Oc|^2`` in seconds.

    ``kappa=2`` matches the phase slope of the propagated response; ``kappa=1``
    is the convention under which the resonant closed-form switch formula
    uses its delay.  With ``ideal_only`` the ideal-EIT preconditions
    (no switch field, no ground-state decoherence) are enforced.
    """
    if m.rabi_c_sq <= 0:
        raise ValidationError("control Rabi frequency is zero: no EIT, no slow-light delay")
    if ideal_only and (m.rabi_s_sq != 0 or m.gamma12 != 0):
        raise ValidationError("analytic delay assumes rabi_s_sq = 0 and gamma12 = 0")
    return kappa * m.od * m.gamma13 / m.rabi_c_sq


def rabi_c_sq_for_delay(delay, od, gamma13, kappa=DEFAULT_DELAY_KAPPA):
    """Inverse of :func:`analytic_group_delay` for the control field."""
    if delay <= 0:
        raise ValidationError("delay must be > 0")
    return kappa * od * gamma13 / delay


def response_poles(m: MediumParams):
    """Poles of f in the complex total-detuning plane.

    Roots of the cubic denominator, minus those cancelled by a numerator root.
    Passive media have every pole in the lower half plane; ``Re`` gives the
    feature centre and ``-Im`` its half width.
    """
    a, b, c = m.gamma24, m.gamma12, m.gamma13
    oc, os_ = m.rabi_c_sq, m.rabi_s_sq
    den = [4.0, 4j * (a + b + c), -(4.0 * (a * b + b * c + c * a) + oc + os_),
           -1j * (a * (4.0 * b * c + oc) + c * os_)]
    num = [4.0, 4j * (a + b), -(4.0 * a * b + os_)]
    poles = list(np.roots(den))
    for z in np.roots(num):
        if not poles:
            break
        dist = [abs(p - z) for p in poles]
        k = int(np.argmin(dist))
        scale = max(abs(z), abs(poles[k]), 1e-300)
        if dist[k] <= 1e-7 * scale:
            poles.pop(k)
    return np.array(poles, dtype=complex)


def feature_width(m: MediumParams):
    """Narrowest spectral scale (rad/s) of the transmission exp(-od Im f).

    Each pole's distance from the real axis, shrunk by sqrt(1 + od) because
    exp(-od Im f) sharpens a feature as the optical depth grows.
    """
    poles = response_poles(m)
    widths = np.abs(poles.imag)
    widths = widths[widths > 0]
    if widths.size == 0:
        return m.gamma13
    return float(widths.min() / math.sqrt(1.0 + m.od))
