"""Absorption profile of atoms held in the fiber-guided dipole trap.

The trap beam has a Gaussian intensity profile, so an atom at radius r sees
a differential light shift ``delta_ac_max * exp(-2 r^2 / w0^2)`` of the probe
transition.  Thermal atoms fill the potential ``-U0 exp(-2 r^2 / w0^2)`` with
Boltzmann weight (radial cut at ``2 w0``) and the measured profile is

    T(delta) = exp(-od < L(delta - shift(r)) >),   L(x) = 1 / (1 + 4 x^2 / gamma_e^2)

averaged over the radial density.  With the trap switched off (modulated
probing) the profile is the unshifted natural line.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import kernels
from .errors import QuadratureError, ValidationError
from .response import natural_line_transmission

R_CUT = 2.0  # radial truncation in units of the waist


@dataclass(frozen=True)
class TrapSpec:
    """Dipole trap seen by the probe.

    ``delta_ac_max`` (rad/s) is the shift on axis; ``depth`` and
    ``temperature`` are in kelvin and only enter through their ratio.
    ``trap_frequency`` (rad/s) is carried for reference and unused.
    """

    delta_ac_max: float
    waist: float
    depth: float
    temperature: float
    trap_on: bool = True
    trap_frequency: float | None = None

    def __post_init__(self):
        if not math.isfinite(self.delta_ac_max):
            raise ValidationError("delta_ac_max must be finite")
        if not (self.waist > 0 and math.isfinite(self.waist)):
            raise ValidationError(f"waist must be > 0, got {self.waist!r}")
        if not (self.depth >= 0 and math.isfinite(self.depth)):
            raise ValidationError(f"depth must be >= 0, got {self.depth!r}")
        if not (self.temperature >= 0 and math.isfinite(self.temperature)):
            raise ValidationError(f"temperature must be >= 0, got {self.temperature!r}")
        if self.temperature == 0 and self.depth == 0:
            raise ValidationError("depth and temperature cannot both be zero")

    @property
    def eta(self):
        """Depth over temperature; inf for a zero-temperature ensemble."""
        if self.temperature == 0:
            return math.inf
        return self.depth / self.temperature


def ac_stark_shift(r, trap: TrapSpec):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValidationError("radius must be >= 0")
    out = trap.delta_ac_max * np.exp(-2.0 * r ** 2 / trap.waist ** 2)
    return out if out.ndim else float(out)


def _lorentz(x, gamma_e):
    x = x / gamma_e
    return 1.0 / (1.0 + 4.0 * x * x)


def _density(s, eta):
    # s = exp(-2 r^2 / w0^2); Boltzmann factor relative to the trap bottom.
    return np.exp(eta * (s - 1.0))


def _mean_absorption(delta, gamma_e, trap: TrapSpec, rtol):
    """< L(delta - shift) > over u = 2 r^2 / w0^2 in [0, 2 R_CUT^2].

    Integrated in v = c u with c = max(eta, 1), so a cold ensemble (density
    ~ exp(-eta u)) still spans order one in the integration variable.
    """
    eta = trap.eta
    c = max(eta, 1.0)
    v_max = c * 2.0 * R_CUT ** 2
    if eta > 745.0:
        # density exp(eta expm1(-v/c)) underflows beyond this point
        v_max = min(v_max, -c * math.log1p(-745.0 / eta))
    points = [k * c / eta for k in (0.25, 1.0, 4.0, 16.0) if 0 < eta and k * c / eta < v_max]
    if trap.delta_ac_max != 0:
        ratio = delta / trap.delta_ac_max
        if math.exp(-v_max / c) < ratio < 1:
            u_star = -math.log(ratio)
            width = gamma_e / abs(delta) if delta else 1.0
            points += [c * u for u in (u_star - width, u_star, u_star + width)
                       if 0 < c * u < v_max]
    points = sorted(set(points)) or None

    def weight(v):
        return math.exp(eta * math.expm1(-v / c))

    def integrand(v):
        return weight(v) * _lorentz(delta - trap.delta_ac_max * math.exp(-v / c), gamma_e)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        num, err_n = integrate.quad(integrand, 0.0, v_max, points=points, epsabs=0.0,
                                    epsrel=rtol, limit=500)
        den, err_d = integrate.quad(weight, 0.0, v_max, points=points, epsabs=0.0,
                                    epsrel=rtol, limit=500)
    if err_n > 100 * rtol * abs(num) or err_d > 100 * rtol * abs(den):
        raise QuadratureError(f"radial average failed at detuning {delta:.4g} rad/s")
    return num / den


def broadened_profile(detunings, od, gamma_e, trap: TrapSpec, rtol=1e-10):
    """Trap-broadened probe transmission on a detuning grid (rad/s)."""
    detunings = np.atleast_1d(np.asarray(detunings, dtype=float))
    if not trap.trap_on or trap.delta_ac_max == 0:
        return natural_line_transmission(detunings, od, gamma_e)
    if od < 0 or gamma_e <= 0:
        raise ValidationError("od must be >= 0 and gamma_e > 0")
    if trap.temperature == 0:
        return natural_line_transmission(detunings - trap.delta_ac_max, od, gamma_e)
    mean = np.array([_mean_absorption(d, gamma_e, trap, rtol) for d in detunings])
    return np.exp(-od * mean)


def sample_shifts(trap: TrapSpec, n_samples, rng):
    """Light shifts of ``n_samples`` atoms drawn from the trapped radial density.

    Rejection sampling: positions uniform over the disc of radius 2 w0,
    accepted with the Boltzmann factor relative to the trap bottom.
    """
    if trap.temperature == 0:
        return np.full(n_samples, float(trap.delta_ac_max))
    eta = trap.eta
    u_max = 2.0 * R_CUT ** 2
    out = np.empty(n_samples)
    filled = 0
    while filled < n_samples:
        batch = max(1024, 2 * (n_samples - filled))
        u = u_max * rng.random(batch)
        s = np.exp(-u)
        keep = s[rng.random(batch) < _density(s, eta)]
        take = min(keep.size, n_samples - filled)
        out[filled:filled + take] = trap.delta_ac_max * keep[:take]
        filled += take
    return out


def broadened_profile_mc(detunings, od, gamma_e, trap: TrapSpec, n_samples=1_000_000, seed=0):
    """Monte-Carlo counterpart of :func:`broadened_profile` (explicit seed)."""
    detunings = np.atleast_1d(np.asarray(detunings, dtype=float))
    if not trap.trap_on:
        return natural_line_transmission(detunings, od, gamma_e)
    rng = np.random.default_rng(seed)
    shifts = sample_shifts(trap, n_samples, rng)
    return np.exp(-od * kernels.lorentz_mean(detunings, shifts, gamma_e))


def absorbance_fwhm(detunings, transmission):
    """Full width at half maximum of -ln T on a detuning grid (linear interpolation)."""
    a = -np.log(np.clip(np.asarray(transmission, dtype=float), 1e-300, None))
    x = np.asarray(detunings, dtype=float)
    k = int(np.argmax(a))
    half = 0.5 * a[k]
    left = k
    while left > 0 and a[left] > half:
        left -= 1
    right = k
    while right < len(a) - 1 and a[right] > half:
        right += 1
    if a[left] > half or a[right] > half:
        raise ValidationError("grid does not cover the half-maximum points")
    xl = np.interp(half, [a[left], a[left + 1]], [x[left], x[left + 1]])
    xr = np.interp(half, [a[right], a[right - 1]], [x[right], x[right - 1]])
    return float(xr - xl)
