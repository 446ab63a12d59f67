"""Atomic and calibration constants.

Defaults live in ``data/constants.json`` (Rb D1 line, guided-mode waist of
the hollow-core fiber).  A user file with the same keys can override any
subset; see :func:`load_constants`.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .errors import ValidationError

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Constants:
    gamma_e: float
    wavelength: float
    waist: float
    sigma_ratio: float | None
    atoms_per_unit_od: float
    dipole_ratio: float
    transfer_eff: float
    pump_photons_half: float
    n_available: float
    detection_efficiency: float

    @property
    def gamma13(self) -> float:
        """Optical coherence decay rate, half the population decay rate."""
        return 0.5 * self.gamma_e

    def __post_init__(self):
        positive = ("gamma_e", "wavelength", "waist", "atoms_per_unit_od",
                    "transfer_eff", "pump_photons_half", "detection_efficiency")
        for name in positive:
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"constant {name!r} must be finite and > 0, got {value!r}")
        if self.dipole_ratio < 0 or self.n_available < 0:
            raise ValidationError("dipole_ratio and n_available must be >= 0")
        if self.sigma_ratio is not None and not 0 < self.sigma_ratio <= 1:
            raise ValidationError(f"sigma_ratio must lie in (0, 1], got {self.sigma_ratio!r}")
        if self.transfer_eff > 1 or self.detection_efficiency > 1:
            raise ValidationError("transfer_eff and detection_efficiency must be <= 1")


_FIELDS = {f.name for f in dataclasses.fields(Constants)}


def _from_mapping(data: dict) -> Constants:
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ValidationError(f"unsupported constants schema_version {version!r}")
    unknown = set(data) - _FIELDS - {"schema_version", "units"}
    if unknown:
        raise ValidationError(f"unknown constants keys: {sorted(unknown)}")
    missing = _FIELDS - set(data)
    if missing:
        raise ValidationError(f"missing constants keys: {sorted(missing)}")
    kwargs = {}
    for name in _FIELDS:
        value = data[name]
        if value is None and name == "sigma_ratio":
            kwargs[name] = None
            continue
        try:
            kwargs[name] = float(value)
        except (TypeError, ValueError):
            raise ValidationError(f"constant {name!r} must be a number, got {value!r}") from None
    return Constants(**kwargs)


@lru_cache(maxsize=1)
def _packaged_defaults() -> dict:
    text = resources.files("slowswitch").joinpath("data/constants.json").read_text()
    return json.loads(text)


def default_constants() -> Constants:
    return _from_mapping(_packaged_defaults())


def load_constants(path: str | Path | None = None) -> Constants:
    """Packaged defaults, overridden key-by-key by the JSON file at *path*."""
    data = dict(_packaged_defaults())
    if path is not None:
        try:
            user = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ValidationError(f"cannot read constants file {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ValidationError(f"constants file {path} is not valid JSON: {exc}") from None
        if not isinstance(user, dict):
            raise ValidationError(f"constants file {path} must hold a JSON object")
        data.update(user)
    return _from_mapping(data)
