"""Incoherent switch: pump photons move atoms into the probed ground state.

A resonant pump on |1>-|3> is fully absorbed; each absorbed photon leaves
an atom in |2> with probability ``transfer_eff`` (set by the branching ratio
of |3>).  Atoms in |2> absorb the probe on the closed |2>-|4> transition, so
the probe transmission falls exponentially with the number of pump photons
until the |1> reservoir is exhausted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import Constants, default_constants
from .errors import ValidationError


@dataclass(frozen=True)
class TransferModel:
    transfer_eff: float
    n_available: float
    kappa: float

    def __post_init__(self):
        if not 0 < self.transfer_eff <= 1:
            raise ValidationError(f"transfer_eff must lie in (0, 1], got {self.transfer_eff!r}")
        if not self.kappa >= 0:
            raise ValidationError(f"kappa must be >= 0, got {self.kappa!r}")
        if not self.n_available >= 0:
            raise ValidationError(f"n_available must be >= 0, got {self.n_available!r}")

    @classmethod
    def default(cls, constants: Constants | None = None):
        """Calibrated so that ``pump_photons_half`` pump photons halve the probe."""
        c = constants or default_constants()
        return cls(transfer_eff=c.transfer_eff, n_available=c.n_available,
                   kappa=math.log(2.0) / c.pump_photons_half)

    @classmethod
    def from_cycling(cls, p_cycling, transfer_eff, n_available):
        """Microscopic form: ``p_cycling`` is the probe absorption exponent per |2> atom."""
        if p_cycling < 0:
            raise ValidationError("p_cycling must be >= 0")
        return cls(transfer_eff=transfer_eff, n_available=n_available,
                   kappa=p_cycling * transfer_eff)

    @property
    def p_cycling(self):
        return self.kappa / self.transfer_eff

    @property
    def saturation_pump(self):
        """Pump photons that empty the |1> reservoir."""
        return self.n_available / self.transfer_eff


def _check_pump(n_pump):
    n_pump = np.asarray(n_pump, dtype=float)
    if np.any(~np.isfinite(n_pump)) or np.any(n_pump < 0):
        raise ValidationError("n_pump must be finite and >= 0")
    return n_pump


def atoms_transferred(n_pump, tm: TransferModel):
    n_pump = _check_pump(n_pump)
    out = np.minimum(tm.transfer_eff * n_pump, tm.n_available)
    return out if out.ndim else float(out)


def probe_transmission_incoherent(n_pump, tm: TransferModel):
    """exp(-kappa * min(n_pump, n_available / transfer_eff))."""
    n_pump = _check_pump(n_pump)
    out = np.exp(-tm.kappa * np.minimum(n_pump, tm.saturation_pump))
    return out if out.ndim else float(out)


def probe_transmission_cycling(n_pump, tm: TransferModel):
    """Same model written per transferred atom: exp(-p_cycling * atoms)."""
    out = np.exp(-tm.p_cycling * np.asarray(atoms_transferred(n_pump, tm)))
    return out if out.ndim else float(out)


def plateau_transmission(tm: TransferModel):
    return math.exp(-tm.kappa * tm.saturation_pump)
