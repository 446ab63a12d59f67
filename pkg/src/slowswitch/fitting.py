"""Least-squares fits of the pulse transmission model to probe spectra.

Free parameters per model:

    two-level   od
    eit         od, rabi_c_sq, gamma12
    n-scheme    od, rabi_c_sq, gamma12, rabi_s_sq

``gamma13`` (and ``gamma24``, tied to ``gamma13`` unless given) stay fixed.
Positive parameters are fitted as ``log(value / scale)`` with ``scale``
gamma13 for rates and gamma13^2 for squared Rabi frequencies, which keeps
them positive and makes the problem independent of the frequency unit.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (NumericalError, SingularFitError, UnderInformativeError,
                     ValidationError)
from .propagation import PulseSpec, pulse_transmission, transmission_spectrum
from .response import MediumParams

MODELS = {
    "two-level": ("od",),
    "eit": ("od", "rabi_c_sq", "gamma12"),
    "n-scheme": ("od", "rabi_c_sq", "gamma12", "rabi_s_sq"),
}
POINTS_PER_PARAM = 8
_RATE_POWER = {"od": 0, "gamma12": 1, "rabi_c_sq": 2, "rabi_s_sq": 2}


@dataclass
class Spectrum:
    """Transmission versus carrier detuning (rad/s) for pulses of width ``t_p``."""

    detunings: np.ndarray
    transmission: np.ndarray
    stderr: np.ndarray | None = None
    t_p: float = 150e-9
    model: str = "eit"

    def __post_init__(self):
        self.detunings = np.asarray(self.detunings, dtype=float)
        self.transmission = np.asarray(self.transmission, dtype=float)
        if self.stderr is not None:
            self.stderr = np.asarray(self.stderr, dtype=float)
        n = self.detunings.shape[0]
        if self.detunings.ndim != 1 or self.transmission.shape != (n,):
            raise ValidationError("detunings and transmission must be 1-d of equal length")
        if self.model not in MODELS:
            raise ValidationError(f"unknown model {self.model!r}; expected one of {sorted(MODELS)}")
        if not self.t_p > 0:
            raise ValidationError("t_p must be > 0")
        if not np.all(np.isfinite(self.detunings)) or not np.all(np.isfinite(self.transmission)):
            raise ValidationError("spectrum values must be finite")
        if np.any(np.diff(self.detunings) <= 0):
            raise ValidationError("detunings must be strictly increasing")
        need = POINTS_PER_PARAM * len(MODELS[self.model])
        if n < need:
            raise ValidationError(f"{self.model} spectrum needs >= {need} points, got {n}")
        slack = 0.0 if self.stderr is None else 3.0 * self.stderr
        if self.stderr is not None:
            if self.stderr.shape != (n,) or np.any(self.stderr < 0):
                raise ValidationError("stderr must be non-negative with one value per point")
        if np.any(self.transmission < -slack) or np.any(self.transmission > 1.0 + slack):
            raise ValidationError("transmission outside [0, 1 + 3 stderr]")

    @property
    def free_names(self):
        return MODELS[self.model]

    def weights(self):
        if self.stderr is None or np.all(self.stderr == 0):
            return np.ones_like(self.transmission)
        if np.any(self.stderr == 0):
            raise ValidationError("stderr must be either all zero (unweighted) or all positive")
        return 1.0 / self.stderr

    @property
    def has_errors(self):
        return self.stderr is not None and bool(np.all(self.stderr > 0))


@dataclass
class LMResult:
    x: np.ndarray
    jac: np.ndarray
    residuals: np.ndarray
    sse: float
    converged: bool
    iterations: int
    message: str
    trace: list = field(default_factory=list)


def _jacobian(fun, x, r0, step):
    cols = []
    for i in range(x.size):
        h = step * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        cols.append((fun(xp) - fun(xm)) / (2.0 * h))
    return np.column_stack(cols)


def _degenerate_direction(jac):
    a = jac.T @ jac
    scale = np.sqrt(np.diag(a))
    if np.any(scale == 0):
        k = int(np.argmin(scale))
        direction = np.zeros(a.shape[0])
        direction[k] = 1.0
        return direction
    norm = a / np.outer(scale, scale)
    vals, vecs = np.linalg.eigh(norm)
    if vals[0] <= 1e-13 * vals[-1]:
        v = vecs[:, 0] / scale
        return v / np.linalg.norm(v)
    return None


def _scaled_gradient_norm(jac, grad, r):
    # Gradient with every Jacobian column and the residual scaled to unit
    # norm (the cosines between residual and columns).  Scale free, so weakly
    # constrained parameters are not declared converged while an exact fit is
    # still far away.
    cols = np.linalg.norm(jac, axis=0)
    cols[cols == 0] = 1.0
    size = float(np.linalg.norm(r))
    if size == 0:
        return 0.0
    return float(np.linalg.norm(grad / cols)) / size


_ACCEL_H = 0.1
_ACCEL_RATIO = 0.75


def _cho_solve(factor, rhs):
    return np.linalg.solve(factor.T, np.linalg.solve(factor, rhs))


def _safe_eval(fun, x):
    try:
        r = fun(x)
    except NumericalError:
        return None
    return r if np.all(np.isfinite(r)) else None


def levenberg_marquardt(fun, x0, *, lower=None, upper=None, max_iter=500, xtol=1e-8,
                        gtol=1e-10, damping=1e-3, jac_step=1e-6, max_step=0.5, accel=True,
                        names=None):
    """Minimise ``sum(fun(x)**2)`` by damped Gauss-Newton steps.

    Damping adds ``lam * max(diag(J^T J))`` uniformly (the parameters live in
    log space, so one scale fits all), which keeps poorly constrained
    directions still until the well constrained ones have settled.  ``lam``
    is divided by 10 after an accepted step and multiplied by 10 after a
    rejected one.  A step is only accepted if it lowers the sum of squares,
    so ``trace`` (one entry per accepted step) is strictly decreasing.  Stops when no component of the
    undamped Gauss-Newton step exceeds ``xtol`` (a relative change, as ``x``
    holds logarithms) or when the gradient norm, taken with every Jacobian
    column and the residual normalised to one, drops below ``gtol``.
    Steps longer than ``max_step`` (infinity norm) are shortened.  With
    ``accel`` each step carries a geodesic-acceleration correction, dropped
    when it exceeds 3/8 of the step.  If no damping level gives a decrease,
    the fit stops and counts as converged only when the residual is already
    orthogonal to the Jacobian columns (cosines below 1e-7).
    Raises :class:`SingularFitError` if J^T J is rank deficient.
    """
    x = np.asarray(x0, dtype=float).copy()
    lower = np.full_like(x, -np.inf) if lower is None else np.asarray(lower, dtype=float)
    upper = np.full_like(x, np.inf) if upper is None else np.asarray(upper, dtype=float)
    if np.any(x < lower) or np.any(x > upper):
        raise ValidationError("initial guess outside bounds")
    r = fun(x)
    if not np.all(np.isfinite(r)):
        raise NumericalError("residuals are not finite at the initial guess")
    sse = float(r @ r)
    trace = [sse]
    lam = damping
    converged = False
    message = "maximum iterations reached"
    it = 0
    jac = _jacobian(fun, x, r, jac_step)
    direction = _degenerate_direction(jac)
    if direction is not None:
        raise SingularFitError("normal equations are singular at the initial guess",
                               direction=direction, names=names)
    while it < max_iter:
        it += 1
        grad = jac.T @ r
        if _scaled_gradient_norm(jac, grad, r) < gtol:
            converged, message = True, "gradient norm below gtol"
            break
        a = jac.T @ jac
        damp = np.eye(x.size) * max(float(np.diag(a).max()), 1e-300)
        accepted = False
        while lam < 1e16:
            try:
                lhs = np.linalg.cholesky(a + lam * damp)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            velocity = _cho_solve(lhs, -grad)
            longest = np.abs(velocity).max()
            if longest > max_step:
                velocity *= max_step / longest
            step = velocity
            if accel:
                # Geodesic acceleration: second-order correction from the
                # directional second derivative of the residuals along the
                # Gauss-Newton step, which follows curved valleys.
                r_probe = _safe_eval(fun, x + _ACCEL_H * velocity)
                if r_probe is not None:
                    rvv = (2.0 / _ACCEL_H) * ((r_probe - r) / _ACCEL_H - jac @ velocity)
                    correction = _cho_solve(lhs, -(jac.T @ rvv))
                    # Near the minimum rvv is mostly finite-difference noise;
                    # an oversized correction falls back to the plain step.
                    if 2.0 * np.linalg.norm(correction) <= _ACCEL_RATIO * np.linalg.norm(velocity):
                        step = velocity + 0.5 * correction
            trial = np.clip(x + step, lower, upper)
            r_trial = _safe_eval(fun, trial)
            if r_trial is not None:
                sse_trial = float(r_trial @ r_trial)
                if sse_trial < sse:
                    accepted = True
                    break
            lam *= 10.0
        if not accepted:
            # No descent left at working precision: accept as converged when
            # the residual is numerically orthogonal to the Jacobian columns.
            stationary = _scaled_gradient_norm(jac, grad, r) <= 1e-7
            converged = bool(stationary or sse == 0)
            message = "no further decrease at working precision"
            break
        x, r, sse = trial, r_trial, sse_trial
        trace.append(sse)
        lam = max(lam / 10.0, 1e-20)
        jac = _jacobian(fun, x, r, jac_step)
        # The undamped Gauss-Newton step estimates the remaining distance to
        # the minimum; x holds logarithms, so it is a relative change.
        remaining = np.linalg.lstsq(jac, -r, rcond=None)[0]
        if np.abs(remaining).max() < xtol:
            converged, message = True, "relative step below xtol"
            break
    direction = _degenerate_direction(jac)
    if direction is not None:
        raise SingularFitError("normal equations are singular at the solution",
                               direction=direction, names=names)
    return LMResult(x=x, jac=jac, residuals=r, sse=sse, converged=converged, iterations=it,
                    message=message, trace=trace)


@dataclass
class FitResult:
    params: dict
    names: tuple
    covariance: np.ndarray
    log_covariance: np.ndarray
    sse: float
    chi2: float
    dof: int
    aic: float
    converged: bool
    iterations: int
    message: str
    medium: MediumParams
    trace: list = field(default_factory=list)

    def stderr(self):
        return dict(zip(self.names, np.sqrt(np.diag(self.covariance))))

    def report(self) -> dict:
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "message": self.message,
            "parameters": {k: float(v) for k, v in self.params.items()},
            "stderr": {k: float(v) for k, v in self.stderr().items()},
            "parameter_order": list(self.names),
            "covariance": self.covariance.tolist(),
            "sse": self.sse,
            "chi2": self.chi2,
            "dof": self.dof,
            "aic": self.aic,
            "fixed": {"gamma13": self.medium.gamma13, "gamma24": self.medium.gamma24},
        }


def _scales(gamma13):
    return {name: gamma13 ** power for name, power in _RATE_POWER.items()}


def _build_medium(values: dict, fixed: dict):
    kw = dict(od=values["od"], gamma13=fixed["gamma13"],
              gamma24=fixed.get("gamma24") or fixed["gamma13"],
              gamma12=values.get("gamma12", fixed.get("gamma12", fixed["gamma13"])),
              rabi_c_sq=values.get("rabi_c_sq", fixed.get("rabi_c_sq", 0.0)),
              rabi_s_sq=values.get("rabi_s_sq", fixed.get("rabi_s_sq", 0.0)))
    return MediumParams(**kw)


def model_spectrum(data: Spectrum, medium: MediumParams):
    return transmission_spectrum(data.detunings, data.t_p, medium)


def fit_spectrum(data: Spectrum, init: dict | None = None, bounds: dict | None = None, *,
                 gamma13: float, gamma24: float | None = None, max_iter=500,
                 xtol=1e-8, gtol=1e-10) -> FitResult:
    """Fit the model selected by ``data.model``.

    ``init`` maps free parameter names to starting values (default:
    :func:`default_init`); ``bounds`` maps names to ``(lo, hi)`` in physical
    units, with ``lo > 0``.
    """
    names = data.free_names
    if not gamma13 > 0:
        raise ValidationError("gamma13 must be > 0")
    fixed = {"gamma13": gamma13, "gamma24": gamma24}
    init = dict(init) if init is not None else default_init(data, gamma13=gamma13)
    missing = [n for n in names if n not in init]
    if missing:
        raise ValidationError(f"init lacks free parameters {missing}")
    scales = _scales(gamma13)
    scale = np.array([scales[n] for n in names])
    x0 = np.array([math.log(init[n] / scales[n]) if init[n] > 0 else math.nan for n in names])
    if not np.all(np.isfinite(x0)):
        raise ValidationError("initial values must be finite and > 0 (fitted in log space)")
    lower = np.full(len(names), -np.inf)
    upper = np.full(len(names), np.inf)
    for i, n in enumerate(names):
        if bounds and n in bounds:
            lo, hi = bounds[n]
            if lo is not None and lo > 0:
                lower[i] = math.log(lo / scale[i])
            if hi is not None:
                upper[i] = math.log(hi / scale[i])
    w = data.weights()
    y = data.transmission

    def residuals(x):
        # exp overflow guard: the log parameters never need more than e^60.
        values = dict(zip(names, scale * np.exp(np.clip(x, -60.0, 60.0))))
        return (model_spectrum(data, _build_medium(values, fixed)) - y) * w

    lm = levenberg_marquardt(residuals, x0, lower=lower, upper=upper, max_iter=max_iter,
                             xtol=xtol, gtol=gtol, names=names)
    values = scale * np.exp(lm.x)
    n, k = y.size, len(names)
    dof = n - k
    jtj = lm.jac.T @ lm.jac
    cov_log = np.linalg.inv(jtj)
    if not data.has_errors:
        cov_log = cov_log * (lm.sse / dof if dof > 0 else math.nan)
    cov_log = 0.5 * (cov_log + cov_log.T)
    cov = cov_log * np.outer(values, values)
    sse_plain = float(((lm.residuals / w) ** 2).sum())
    aic = n * math.log(max(sse_plain, 1e-300) / n) + 2 * k
    params = dict(zip(names, values.tolist()))
    return FitResult(params=params, names=tuple(names), covariance=cov, log_covariance=cov_log,
                     sse=sse_plain, chi2=lm.sse, dof=dof, aic=aic, converged=lm.converged,
                     iterations=lm.iterations, message=lm.message,
                     medium=_build_medium(params, fixed), trace=lm.trace)


@dataclass(frozen=True)
class Noise:
    kind: str = "none"
    level: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "gaussian", "poisson"):
            raise ValidationError(f"unknown noise kind {self.kind!r}")
        if self.kind != "none" and not self.level > 0:
            raise ValidationError("noise level must be > 0")


def suggest_design(medium: MediumParams, n_points=64, t_p_min=150e-9):
    """Pulse width and detuning grid that resolve the features of ``medium``.

    The pulse is made long enough to resolve the transparency window
    (``t_p >= 1 / window``), half of the points span the absorption line out
    to 1.5 times its half-transmission wing or the Autler-Townes peaks, and the
    other half cover the window (or the pulse bandwidth, whichever is wider).
    """
    if n_points < 2:
        raise ValidationError("n_points must be >= 2")
    g13 = medium.gamma13
    gamma_e = 2.0 * g13
    window = medium.rabi_c_sq / (4.0 * g13) / math.sqrt(1.0 + medium.od)
    t_p = t_p_min if window == 0 else max(t_p_min, 1.0 / window)
    wing = 0.5 * gamma_e * math.sqrt(max(medium.od / math.log(2.0) - 1.0, 0.0) + 1.0)
    outer = 1.5 * max(wing, 0.5 * math.sqrt(medium.rabi_c_sq), 4.0 / t_p)
    inner = max(3.0 / t_p, 3.0 * window)
    grid = np.concatenate([np.linspace(-outer, outer, n_points // 2),
                           np.linspace(-inner, inner, n_points - n_points // 2)])
    return t_p, np.unique(grid)


def synthesize_spectrum(medium: MediumParams, t_p, detunings, model="eit", noise: Noise | None = None,
                        seed=None, rtol=1e-11) -> Spectrum:
    """Model spectrum from :func:`pulse_transmission`, optionally with seeded noise.

    Gaussian noise adds ``level`` (absolute transmission) per point; Poisson
    noise draws counts with mean ``level * T`` and converts back.
    """
    noise = noise or Noise()
    detunings = np.asarray(detunings, dtype=float)
    clean = np.array([pulse_transmission(PulseSpec(t_p=t_p, delta_probe=d), medium, rtol=rtol)
                      for d in detunings])
    if noise.kind == "none":
        return Spectrum(detunings, clean, None, t_p, model)
    if seed is None:
        raise ValidationError("a seed is required for noisy spectra")
    rng = np.random.default_rng(seed)
    if noise.kind == "gaussian":
        values = clean + noise.level * rng.standard_normal(clean.size)
        stderr = np.full(clean.size, noise.level)
    else:
        counts = rng.poisson(noise.level * clean)
        values = counts / noise.level
        stderr = np.sqrt(np.maximum(counts, 1)) / noise.level
    return Spectrum(detunings, values, stderr, t_p, model)


def _half_crossings(x, y, level):
    above = y > level
    idx = np.nonzero(above[1:] != above[:-1])[0]
    out = []
    for i in idx:
        out.append(float(np.interp(level, sorted([y[i], y[i + 1]]),
                                   [x[i], x[i + 1]] if y[i] < y[i + 1] else [x[i + 1], x[i]])))
    return out


def default_init(data: Spectrum, *, gamma13: float) -> dict:
    """Deterministic heuristic starting point for :func:`fit_spectrum`.

    od from the outer half-transmission points of the absorption line
    (falling back to -ln T_min for shallow lines), rabi_c_sq from the width
    of the transparency window around zero detuning, gamma12 from the
    residual absorption at the window centre.
    """
    x, y = data.detunings, np.clip(data.transmission, 1e-12, None)
    if np.all(y > 0.95):
        raise UnderInformativeError("spectrum is transparent everywhere; nothing to fit")
    if np.all(y < 0.05):
        raise UnderInformativeError("spectrum is opaque everywhere; no lineshape visible")
    gamma_e = 2.0 * gamma13
    t_min = float(y.min())
    cross = _half_crossings(x, y, 0.5)
    if t_min > 0.2 or len(cross) < 2:
        od = -math.log(t_min)
    else:
        half_width = 0.5 * (max(cross) - min(cross))
        od = math.log(2.0) * (1.0 + (2.0 * half_width / gamma_e) ** 2)
    od = max(od, 0.05)
    guess = {"od": od}
    if data.model == "two-level":
        return guess

    centre = int(np.argmin(np.abs(x)))
    t0 = float(y[centre])
    # transparency window: half way between the centre and the deepest point
    level = 0.5 * (t0 + t_min)
    right = [c for c in _half_crossings(x, y, level) if c > x[centre]]
    left = [c for c in _half_crossings(x, y, level) if c < x[centre]]
    if right and left and t0 > t_min + 0.05:
        w = 0.5 * (min(right) - max(left))
        # Autler-Townes limit w ~ Oc/2 versus narrow-window limit.
        rabi_c_sq = max((2.0 * w) ** 2 * 0.5,
                        4.0 * gamma13 * math.sqrt(od) * w / math.sqrt(math.log(2.0)))
    else:
        rabi_c_sq = gamma13 ** 2
    guess["rabi_c_sq"] = rabi_c_sq
    frac = min(max(-math.log(t0) / od, 1e-4), 0.9)
    gamma12 = rabi_c_sq * frac / (4.0 * gamma13 * (1.0 - frac))
    guess["gamma12"] = min(max(gamma12, 1e-4 * gamma13), gamma13)
    if data.model == "n-scheme":
        guess["rabi_s_sq"] = 0.05 * rabi_c_sq
    return guess


# -- CSV / report I/O ---------------------------------------------------------

CSV_COLUMNS = ("detuning_hz", "transmission", "stderr")


def read_spectrum_csv(path, t_p, model) -> Spectrum:
    """Spectrum CSV with header ``detuning_hz,transmission,stderr`` (Hz, not rad/s)."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            rows = [row for row in reader if row]
    except OSError as exc:
        raise ValidationError(f"cannot read spectrum {path}: {exc}") from None
    if header is None or [h.strip() for h in header] != list(CSV_COLUMNS):
        raise ValidationError(f"spectrum CSV header must be {','.join(CSV_COLUMNS)}")
    try:
        arr = np.array([[float(v) for v in row] for row in rows])
    except ValueError as exc:
        raise ValidationError(f"non-numeric value in {path}: {exc}") from None
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValidationError(f"{path} must have exactly three columns")
    stderr = arr[:, 2]
    return Spectrum(2.0 * math.pi * arr[:, 0], arr[:, 1],
                    None if np.all(stderr == 0) else stderr, t_p, model)


def write_spectrum_csv(spectrum: Spectrum, path):
    stderr = spectrum.stderr if spectrum.stderr is not None else np.zeros_like(spectrum.detunings)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for d, t, s in zip(spectrum.detunings, spectrum.transmission, stderr):
            writer.writerow((repr(float(d / (2.0 * math.pi))), repr(float(t)), repr(float(s))))


def write_fit_report(result: FitResult, path):
    Path(path).write_text(json.dumps(result.report(), indent=2, sort_keys=True) + "\n")
