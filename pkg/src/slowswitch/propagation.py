"""Gaussian probe pulses through the atomic medium.

Three routes to the energy transmission of a pulse with envelope
``E_in(t) ~ exp(-t^2 / 4 t_p^2)``:

* :func:`propagate_pulse` applies the spectral filter ``exp(i OD f / 2)`` on an
  FFT grid and returns the output envelope as well;
* :func:`pulse_transmission` integrates
  ``sqrt(2/pi) t_p  int dw exp(-2 t_p^2 w^2) exp(-OD Im f(w))`` by adaptive
  quadrature;
* :func:`transmission_spectrum` evaluates the same integral for many carrier
  detunings at once with composite Gauss-Legendre rules (used by fitting and
  sweeps).

:func:`closed_form_transmission` is the resonant small-switch approximation
``exp(-N_s (mu_s/mu_p)^2 (3/pi)(lambda^2/A) t_d / (sqrt2 t_p + t_d)) /
sqrt(1 + 8 t_d^2 / (OD t_p^2))``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import kernels
from .errors import (DelayExtractionError, GridTooSmallError, QuadratureError,
                     SingularParameterError, ValidationError)
from .photometry import Geometry, photons_from_rabi_sq
from .response import MediumParams, feature_width, response_poles

MIN_SAMPLES = 1 << 12
MIN_SPAN = 8.0
# Gaussian weight exp(-2 x^2) at |x| = 9 is e^-162.
_X_CUT = 9.0


@dataclass(frozen=True)
class PulseSpec:
    """Gaussian probe: rms intensity width ``t_p`` (s), carrier detuning (rad/s)."""

    t_p: float
    delta_probe: float = 0.0
    photons: float = 1.0

    def __post_init__(self):
        if not (self.t_p > 0 and math.isfinite(self.t_p)):
            raise ValidationError(f"t_p must be > 0, got {self.t_p!r}")
        if not math.isfinite(self.delta_probe):
            raise ValidationError("delta_probe must be finite")
        if not (self.photons >= 0 and math.isfinite(self.photons)):
            raise ValidationError(f"photons must be >= 0, got {self.photons!r}")

    def envelope(self, t):
        """Input field envelope normalised so that int |E|^2 dt = photons."""
        amp = math.sqrt(self.photons / (math.sqrt(2.0 * math.pi) * self.t_p))
        return amp * np.exp(-np.asarray(t) ** 2 / (4.0 * self.t_p ** 2))

    def spectrum(self, omega):
        """(1/sqrt(2 pi)) int dt E(t) exp(i omega t)."""
        amp = math.sqrt(self.photons / (math.sqrt(2.0 * math.pi) * self.t_p))
        return amp * math.sqrt(2.0) * self.t_p * np.exp(-(self.t_p * np.asarray(omega)) ** 2)


@dataclass(frozen=True)
class Grid:
    """FFT sampling request.

    ``span`` is the half width of the angular-frequency window in units of
    1/t_p.  ``n=None`` picks the smallest power of two >= 2**12 that puts
    ``samples_per_feature`` points across the narrowest spectral feature of
    the medium.
    """

    n: int | None = None
    span: float = 16.0
    samples_per_feature: int = 16
    max_n: int = 1 << 22

    def __post_init__(self):
        if self.span < MIN_SPAN:
            raise ValidationError(f"span must be >= {MIN_SPAN} / t_p, got {self.span!r}")
        if self.n is not None and (self.n < MIN_SAMPLES or self.n & (self.n - 1)):
            raise ValidationError(f"n must be a power of two >= {MIN_SAMPLES}, got {self.n!r}")

    def resolve(self, pulse: PulseSpec, m: MediumParams):
        half = self.span / pulse.t_p
        if self.n is not None:
            return self.n, half
        n = MIN_SAMPLES
        if m.od > 0:
            width = feature_width(m)
            needed = 2.0 * half * self.samples_per_feature / width
            if needed > self.max_n:
                raise GridTooSmallError(
                    f"medium feature width {width:.3g} rad/s needs {needed:.3g} samples "
                    f"(> max_n = {self.max_n})")
            while n < needed:
                n <<= 1
        return n, half


@dataclass
class PropagationResult:
    transmission: float
    delay: float
    centroid_delay: float
    times: np.ndarray = field(repr=False)
    envelope_in: np.ndarray = field(repr=False)
    envelope_out: np.ndarray = field(repr=False)
    grid_meta: dict = field(default_factory=dict)
    multi_peak: bool = False


@dataclass(frozen=True)
class DelayEstimate:
    peak: float
    centroid: float
    multi_peak: bool = False


def _peak_time(times, intensity):
    k = int(np.argmax(intensity))
    if k == 0 or k == len(intensity) - 1:
        return float(times[k])
    y = intensity[k - 1:k + 2]
    if np.all(y > 0):
        # A Gaussian is exactly parabolic in log intensity.
        y = np.log(y)
    denom = y[0] - 2.0 * y[1] + y[2]
    if denom >= 0:
        return float(times[k])
    shift = 0.5 * (y[0] - y[2]) / denom
    return float(times[k] + shift * (times[1] - times[0]))


def _count_peaks(intensity, rel=0.1):
    top = intensity.max()
    inner = intensity[1:-1]
    is_peak = (inner > intensity[:-2]) & (inner >= intensity[2:]) & (inner > rel * top)
    return int(is_peak.sum())


def extract_delay(times, envelope_in, envelope_out):
    """Peak and centroid delay of ``envelope_out`` relative to ``envelope_in``.

    Envelopes are complex or real field amplitudes on the uniform grid
    ``times``.  A secondary intensity maximum above 10% of the main one sets
    ``multi_peak``.
    """
    times = np.asarray(times, dtype=float)
    i_in = np.abs(np.asarray(envelope_in)) ** 2
    i_out = np.abs(np.asarray(envelope_out)) ** 2
    if i_in.shape != times.shape or i_out.shape != times.shape:
        raise ValidationError("envelopes and time grid must have the same shape")
    for name, inten in (("input", i_in), ("output", i_out)):
        top = inten.max()
        if not top > 0 or inten.min() >= (1.0 - 1e-9) * top:
            raise DelayExtractionError(f"{name} envelope is flat; no peak to time")
    peak = _peak_time(times, i_out) - _peak_time(times, i_in)
    centroid = (np.sum(times * i_out) / np.sum(i_out)) - (np.sum(times * i_in) / np.sum(i_in))
    multi = _count_peaks(i_in) > 1 or _count_peaks(i_out) > 1
    return DelayEstimate(peak=float(peak), centroid=float(centroid), multi_peak=multi)


def _filter(omega, pulse: PulseSpec, m: MediumParams):
    if m.od == 0:
        return np.ones_like(omega, dtype=complex)
    f = kernels.response(omega + pulse.delta_probe, m.gamma13, m.gamma12, m.gamma24,
                         m.rabi_c_sq, m.rabi_s_sq)
    if np.any(np.isnan(f)):
        raise SingularParameterError("response denominator vanished on the frequency grid")
    return np.exp(0.5j * m.od * f)


def propagate_pulse(pulse: PulseSpec, m: MediumParams, grid: Grid | None = None,
                    response=None) -> PropagationResult:
    """Output envelope of the probe pulse, by discrete Fourier transform.

    ``response``, if given, replaces the atomic response: a callable mapping
    sideband angular frequencies to complex ``f``.
    """
    grid = grid or Grid()
    n, half = grid.resolve(pulse, m)
    dt = math.pi / half
    omega = 2.0 * math.pi * np.fft.fftfreq(n, d=dt)
    d_omega = 2.0 * half / n
    if response is None:
        transfer = _filter(omega, pulse, m)
    else:
        transfer = np.exp(0.5j * m.od * np.asarray(response(omega), dtype=complex))
    spec_out = pulse.spectrum(omega) * transfer
    env_out = np.fft.fftshift(np.fft.fft(spec_out)) * d_omega / math.sqrt(2.0 * math.pi)
    times = (np.arange(n) - n // 2) * dt
    env_in = pulse.envelope(times)

    i_out = np.abs(env_out) ** 2
    e_in = float(np.sum(np.abs(env_in) ** 2))
    e_out = float(np.sum(i_out))
    meta = {"samples": n, "half_span_rad_s": half, "d_omega_rad_s": d_omega, "dt_s": dt,
            "window_s": n * dt}
    if e_in == 0:
        raise ValidationError("pulse carries no photons")
    if e_out > 0:
        edge = float(i_out[:3].sum() + i_out[-3:].sum())
        if edge > 1e-6 * e_out:
            raise GridTooSmallError(
                f"{edge / e_out:.2e} of the output energy sits at the grid edge; "
                f"increase Grid.n (now {n})")
    transmission = e_out / e_in
    if e_out > 0:
        est = extract_delay(times, env_in, env_out)
        delay, centroid, multi = est.peak, est.centroid, est.multi_peak
    else:
        delay = centroid = float("nan")
        multi = False
    return PropagationResult(transmission=transmission, delay=delay, centroid_delay=centroid,
                             times=times, envelope_in=env_in, envelope_out=env_out,
                             grid_meta=meta, multi_peak=multi)


def _breakpoints(m: MediumParams, origin, scale, lo, hi):
    """Feature-graded breakpoints in a rescaled coordinate ``(delta - origin) * scale``."""
    pts = []
    shrink = math.sqrt(1.0 + m.od)
    for p in response_poles(m):
        c = (p.real - origin) * scale
        w = abs(p.imag) / shrink * scale
        if lo < c < hi:
            pts.append(c)
        if w <= 0:
            continue
        h = w
        while h < hi - lo:
            for x in (c - h, c + h):
                if lo < x < hi:
                    pts.append(x)
            h *= 2.0
    merged = []
    for x in sorted(pts):
        if not merged or x - merged[-1] > 1e-6 * (hi - lo):
            merged.append(x)
    return merged


def pulse_transmission(pulse: PulseSpec, m: MediumParams, rtol=1e-8):
    """Energy transmission N_out / N_in by adaptive quadrature (scipy QUADPACK)."""
    if m.od == 0:
        return 1.0
    if not 0 < rtol < 1:
        raise ValidationError("rtol must lie in (0, 1)")
    args = (pulse.t_p, m.od, pulse.delta_probe, m.gamma13, m.gamma12, m.gamma24,
            m.rabi_c_sq, m.rabi_s_sq)
    points = _breakpoints(m, pulse.delta_probe, pulse.t_p, -_X_CUT, _X_CUT)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, abserr, info = integrate.quad(
            kernels.eq2_integrand(), -_X_CUT, _X_CUT, args=args, points=points or None,
            epsabs=0.0, epsrel=rtol, limit=2000, full_output=1)[:3]
    if not math.isfinite(value):
        raise SingularParameterError("transmission integrand is not finite; "
                                     "response denominator vanished")
    if abserr > rtol * abs(value) * 10 and abserr > 1e-300:
        raise QuadratureError(f"quadrature missed rtol={rtol:g}: value {value:.6g} "
                              f"+- {abserr:.2g} after {info['neval']} evaluations")
    return min(max(math.sqrt(2.0 / math.pi) * value, 0.0), 1.0)


def _gl_rule(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def spectrum_nodes(m: MediumParams, t_p, lo, hi, order=20):
    """Composite Gauss-Legendre nodes and weights on [lo, hi] (total detuning).

    Panels are graded geometrically around each response pole and capped at
    width 0.5 / t_p so the Gaussian pulse spectrum is resolved everywhere.
    """
    cuts = [lo, hi] + _breakpoints(m, 0.0, 1.0, lo, hi)
    cuts = np.unique(np.asarray(cuts, dtype=float))
    max_w = 0.5 / t_p
    edges = [cuts[0]]
    for a, b in zip(cuts[:-1], cuts[1:]):
        k = max(1, int(math.ceil((b - a) / max_w)))
        edges.extend(a + (b - a) * np.arange(1, k + 1) / k)
    edges = np.asarray(edges)
    x, w = _gl_rule(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def transmission_spectrum(detunings, t_p, m: MediumParams, order=20):
    """Pulse transmission at each carrier detuning (vectorised, fixed rule)."""
    detunings = np.atleast_1d(np.asarray(detunings, dtype=float))
    if not t_p > 0:
        raise ValidationError("t_p must be > 0")
    if m.od == 0:
        return np.ones_like(detunings)
    lo = detunings.min() - _X_CUT / t_p
    hi = detunings.max() + _X_CUT / t_p
    nodes, weights = spectrum_nodes(m, t_p, lo, hi, order)
    out = kernels.filtered_gaussian(detunings, nodes, weights, t_p, m.od, m.gamma13, m.gamma12,
                                    m.gamma24, m.rabi_c_sq, m.rabi_s_sq)
    if not np.all(np.isfinite(out)):
        raise SingularParameterError("response denominator vanished on the quadrature nodes")
    return np.clip(math.sqrt(2.0 / math.pi) * t_p * out, 0.0, 1.0)


def _switch_exponent_per_photon(t_p, t_d, geom: Geometry):
    return geom.dipole_ratio ** 2 * (3.0 / math.pi) / geom.area_over_lambda_sq * (
        t_d / (math.sqrt(2.0) * t_p + t_d))


def closed_form_transmission(n_s, t_p, t_d, od, geom: Geometry):
    """Resonant probe transmission with ``n_s`` switch photons (small-switch limit)."""
    if n_s < 0:
        raise ValidationError("n_s must be >= 0")
    if not t_p > 0:
        raise ValidationError("t_p must be > 0")
    if t_d < 0:
        raise ValidationError("t_d must be >= 0")
    if not od > 0:
        raise ValidationError("od must be > 0")
    exponent = n_s * _switch_exponent_per_photon(t_p, t_d, geom)
    return math.exp(-exponent) / math.sqrt(1.0 + 8.0 * t_d ** 2 / (od * t_p ** 2))


def switch_threshold(target, t_p, t_d, od, geom: Geometry):
    """Switch photons that scale the closed-form transmission by ``target``."""
    if not 0 < target <= 1:
        raise ValidationError(f"target must lie in (0, 1], got {target!r}")
    if t_d <= 0:
        raise ValidationError("t_d must be > 0: no switching without slow light")
    if not t_p > 0 or not od > 0:
        raise ValidationError("t_p and od must be > 0")
    per_photon = _switch_exponent_per_photon(t_p, t_d, geom)
    if per_photon == 0:
        raise ValidationError("zero dipole ratio: switch photons do not couple")
    return -math.log(target) / per_photon


VALIDITY_COLUMNS = ("kappa", "od", "td_over_tp", "rabi_s_sq_over_c_sq", "t_p", "t_d",
                    "rabi_c_sq", "rabi_s_sq", "n_s", "closed_form", "full_integral",
                    "rel_deviation")


def validity_map(gamma13, t_p, geom: Geometry, ods=(3.0, 5.0, 10.0, 20.0, 30.0),
                 td_ratios=(0.2, 0.5, 1.0, 2.0, 3.5, 5.0), switch_ratios=(0.0, 0.01, 0.02, 0.04),
                 kappas=(1.0, 2.0), rtol=1e-10):
    """Closed form against the full integral over the small-switch regime.

    For each delay convention ``kappa`` the medium is built from the delay fed
    to the closed form, ``|Oc|^2 = kappa od gamma13 / t_d``, with
    ``gamma12 = 0`` and ``gamma24 = gamma13``.  Switch photons come from
    ``|Os|^2`` through :func:`photons_from_rabi_sq` over the duration
    ``sqrt2 t_p + t_d`` with rate ``kappa gamma13``, the pairing under which the
    two switch exponents coincide.  Returns ``(rows, best_kappa)``; rows are
    dicts keyed by :data:`VALIDITY_COLUMNS`.
    """
    rows = []
    worst = {}
    for kappa in kappas:
        worst[kappa] = 0.0
        for od in ods:
            for r in td_ratios:
                t_d = r * t_p
                rabi_c_sq = kappa * od * gamma13 / t_d
                for s in switch_ratios:
                    rabi_s_sq = s * rabi_c_sq
                    m = MediumParams(od=od, gamma13=gamma13, gamma12=0.0, gamma24=gamma13,
                                     rabi_c_sq=rabi_c_sq, rabi_s_sq=rabi_s_sq)
                    n_s = photons_from_rabi_sq(rabi_s_sq, math.sqrt(2.0) * t_p + t_d, geom,
                                               kappa * gamma13)
                    cf = closed_form_transmission(n_s, t_p, t_d, od, geom)
                    full = pulse_transmission(PulseSpec(t_p=t_p), m, rtol=rtol)
                    dev = abs(cf - full) / full
                    worst[kappa] = max(worst[kappa], dev)
                    rows.append(dict(zip(VALIDITY_COLUMNS, (
                        kappa, od, r, s, t_p, t_d, rabi_c_sq, rabi_s_sq, n_s, cf, full, dev))))
    best = min(worst, key=worst.get)
    return rows, best
