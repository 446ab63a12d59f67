"""Conversions between lab observables and model parameters.

Photon numbers and atom numbers on one side; optical depth and squared Rabi
frequencies on the other.  All photon numbers are counted at the atoms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import Constants, default_constants
from .errors import ValidationError

SCHEMES = ("baseline", "copropagating-slow", "stationary")


@dataclass(frozen=True)
class Geometry:
    """Guided-mode geometry: wavelength and 1/e^2 waist in metres."""

    wavelength: float
    waist: float
    dipole_ratio: float = 1.0

    def __post_init__(self):
        if not (self.wavelength > 0 and math.isfinite(self.wavelength)):
            raise ValidationError(f"wavelength must be > 0, got {self.wavelength!r}")
        if not (self.waist > 0 and math.isfinite(self.waist)):
            raise ValidationError(f"waist must be > 0, got {self.waist!r}")
        if not (self.dipole_ratio >= 0 and math.isfinite(self.dipole_ratio)):
            raise ValidationError(f"dipole_ratio must be >= 0, got {self.dipole_ratio!r}")

    @property
    def area(self) -> float:
        return math.pi * self.waist ** 2

    @property
    def area_over_lambda_sq(self) -> float:
        return self.area / self.wavelength ** 2

    @classmethod
    def from_constants(cls, constants: Constants | None = None, **overrides):
        c = constants or default_constants()
        kwargs = dict(wavelength=c.wavelength, waist=c.waist, dipole_ratio=c.dipole_ratio)
        kwargs.update(overrides)
        return cls(**kwargs)


@dataclass(frozen=True)
class EnsembleSpec:
    n_eff: float
    sigma_ratio: float

    def __post_init__(self):
        if not (self.n_eff >= 0 and math.isfinite(self.n_eff)):
            raise ValidationError(f"n_eff must be >= 0, got {self.n_eff!r}")
        if not 0 < self.sigma_ratio <= 1:
            raise ValidationError(f"sigma_ratio must lie in (0, 1], got {self.sigma_ratio!r}")


def resonant_cross_section(wavelength):
    """Two-level resonant cross section 3 lambda^2 / (2 pi)."""
    return 3.0 * wavelength ** 2 / (2.0 * math.pi)


def calibrated_sigma_ratio(geom: Geometry, atoms_per_unit_od=100.0):
    """sigma_eg / sigma_0 such that ``atoms_per_unit_od`` atoms give OD = 1."""
    if atoms_per_unit_od <= 0:
        raise ValidationError("atoms_per_unit_od must be > 0")
    ratio = geom.area / (2.0 * atoms_per_unit_od * resonant_cross_section(geom.wavelength))
    if ratio > 1:
        raise ValidationError(
            f"calibration needs sigma_ratio = {ratio:.3g} > 1; the geometry cannot reach "
            f"OD 1 with {atoms_per_unit_od:g} atoms")
    return ratio


def default_sigma_ratio(geom: Geometry, constants: Constants | None = None):
    c = constants or default_constants()
    if c.sigma_ratio is not None:
        return c.sigma_ratio
    return calibrated_sigma_ratio(geom, c.atoms_per_unit_od)


def ensemble(n_eff, geom: Geometry, constants: Constants | None = None) -> EnsembleSpec:
    return EnsembleSpec(n_eff=n_eff, sigma_ratio=default_sigma_ratio(geom, constants))


def od_from_atoms(ens: EnsembleSpec, geom: Geometry):
    """OD = 2 n_eff sigma_eg / A."""
    sigma = ens.sigma_ratio * resonant_cross_section(geom.wavelength)
    return 2.0 * ens.n_eff * sigma / geom.area


def atoms_from_od(od, geom: Geometry, sigma_ratio):
    """Exact inverse of :func:`od_from_atoms`."""
    if od < 0:
        raise ValidationError("od must be >= 0")
    if not 0 < sigma_ratio <= 1:
        raise ValidationError(f"sigma_ratio must lie in (0, 1], got {sigma_ratio!r}")
    sigma = sigma_ratio * resonant_cross_section(geom.wavelength)
    return od * geom.area / (2.0 * sigma)


def _photon_rabi_factor(geom: Geometry, gamma):
    return (3.0 / math.pi) * (geom.wavelength ** 2 / geom.area) * gamma * geom.dipole_ratio ** 2


def rabi_sq_from_photons(n, duration, geom: Geometry, gamma):
    """|Omega|^2 (rad^2/s^2) of a square pulse of ``n`` photons lasting ``duration``.

    ``(3/pi) (lambda^2/A) gamma (mu_s/mu_p)^2 n / duration``.  With ``gamma``
    the optical coherence decay rate of the driven transition this is the
    saturation-intensity relation for a photon flux n / duration through the
    mode area.  Use ``geom.dipole_ratio = 1`` for the control field.
    """
    if not duration > 0:
        raise ValidationError(f"duration must be > 0, got {duration!r}")
    if n < 0:
        raise ValidationError(f"photon number must be >= 0, got {n!r}")
    return _photon_rabi_factor(geom, gamma) * n / duration


def photons_from_rabi_sq(rabi_sq, duration, geom: Geometry, gamma):
    if not duration > 0:
        raise ValidationError(f"duration must be > 0, got {duration!r}")
    factor = _photon_rabi_factor(geom, gamma)
    if factor == 0:
        raise ValidationError("zero dipole ratio: photons do not couple")
    return rabi_sq * duration / factor


def interaction_probability(geom: Geometry, ens: EnsembleSpec):
    """Single atom / single photon interaction probability 2 sigma_eg / A."""
    sigma = ens.sigma_ratio * resonant_cross_section(geom.wavelength)
    return min(1.0, 2.0 * sigma / geom.area)


def projected_threshold(scheme, od, geom: Geometry):
    """Switch threshold scaling for the three interaction schemes.

    ``baseline`` and ``copropagating-slow`` return a photon number,
    ``stationary`` an interaction probability.
    """
    if scheme not in SCHEMES:
        raise ValidationError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    if scheme == "stationary":
        if od < 0:
            raise ValidationError("od must be >= 0")
        return min(1.0, od / geom.area_over_lambda_sq)
    if not od > 0:
        raise ValidationError("od must be > 0")
    if scheme == "baseline":
        return geom.area_over_lambda_sq
    return geom.area_over_lambda_sq / math.sqrt(od)
