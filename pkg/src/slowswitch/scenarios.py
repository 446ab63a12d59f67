"""Config-driven scenarios: sweeps, pulse shapes and the switch truth table.

A scenario is a JSON document validated against ``data/scenario.schema.json``.
``params`` is a flat mapping of physical inputs; a sweep axis and the
optional per-curve ``params`` override entries of it.  Units are SI (rates in
rad/s, times in s, trap depth and temperature in K) except the probe and
light-shift detunings, which are given as ``delta / 2 pi`` in MHz.

Control and switch fields are set either by ``rabi_c_sq`` / ``rabi_s_sq``
(rad^2/s^2) or by photon numbers; photons are converted with
:func:`photometry.rabi_sq_from_photons` over ``control_duration`` (default
1 us) and ``switch_duration`` (default ``sqrt(2) t_p + t_d`` with
``t_d = od gamma13 / rabi_c_sq``).

Randomness: point ``j`` of curve ``i`` draws from
``SeedSequence(seed, spawn_key=(i, j))``; truth-table row ``k`` from
``SeedSequence(seed, spawn_key=(k,))``.  Results therefore do not depend on
evaluation order.
"""
from __future__ import annotations

import copy
import hashlib
import json
import math
import os
import platform
import tempfile
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import metadata, resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, _accel
from .constants import Constants, default_constants
from .errors import ValidationError
from .incoherent import TransferModel, probe_transmission_incoherent
from .photometry import Geometry, rabi_sq_from_photons
from .propagation import (Grid, PulseSpec, _switch_exponent_per_photon, propagate_pulse,
                          pulse_transmission, switch_threshold)
from .response import MediumParams
from .trap import TrapSpec, broadened_profile

SCHEMA_VERSION = 1
MHZ = 2.0 * math.pi * 1e6

DEFAULT_PARAMS = {
    "od": 0.0,
    "gamma12": 0.0,
    "gamma24": None,
    "rabi_c_sq": None,
    "control_photons": None,
    "control_duration": 1e-6,
    "rabi_s_sq": None,
    "switch_photons": None,
    "switch_duration": None,
    "t_p": 150e-9,
    "delta_p_mhz": 0.0,
    "photons": 1.0,
    "n_pump": 0.0,
    "transfer_eff": None,
    "pump_photons_half": None,
    "n_available": None,
    "trap_on": True,
    "delta_ac_max_mhz": 0.0,
    "depth": 0.0,
    "temperature": 0.0,
}

# Setting one member of a pair clears the other.
_EXCLUSIVE = {"rabi_c_sq": "control_photons", "control_photons": "rabi_c_sq",
              "rabi_s_sq": "switch_photons", "switch_photons": "rabi_s_sq"}

AXES = {
    "transmission": ("control_photons", "delta_p_mhz", "gamma12", "od", "rabi_c_sq",
                     "rabi_s_sq", "switch_photons", "t_p"),
    "incoherent": ("n_pump",),
    "trap": ("delta_p_mhz", "od", "temperature"),
    "pulse": (),
    "truth-table": (),
}


@lru_cache(maxsize=1)
def _schema():
    text = resources.files("slowswitch").joinpath("data/scenario.schema.json").read_text()
    return json.loads(text)


def builtin_scenarios():
    root = resources.files("slowswitch").joinpath("data/scenarios")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


@dataclass
class ScenarioConfig:
    """Validated scenario document; ``data`` keeps the JSON form."""

    data: dict

    @property
    def scenario(self) -> str:
        return self.data["scenario"]

    @property
    def pipeline(self) -> str:
        return self.data["pipeline"]

    @property
    def params(self) -> dict:
        return {**DEFAULT_PARAMS, **self.data["params"]}

    @property
    def curves(self) -> list:
        return self.data.get("curves") or [{"label": "transmission"}]

    @property
    def noise(self) -> dict:
        return self.data.get("noise", {"kind": "none"})

    @property
    def seed(self):
        return self.data.get("seed")

    @property
    def stem(self) -> str:
        return self.data.get("outputs", {}).get("stem", self.scenario)

    def detection_efficiency(self, constants: Constants) -> float:
        return self.data.get("detection_efficiency", constants.detection_efficiency)

    def sweep_values(self):
        sw = self.data["sweep"]
        if "values" in sw:
            values = np.asarray(sw["values"], dtype=float)
        elif sw.get("spacing", "linear") == "log":
            if sw["start"] <= 0 or sw["stop"] <= 0:
                raise ValidationError("log sweep needs start > 0 and stop > 0")
            values = np.geomspace(sw["start"], sw["stop"], sw["num"])
        else:
            values = np.linspace(sw["start"], sw["stop"], sw["num"])
        return np.unique(values)

    def with_seed(self, seed):
        data = copy.deepcopy(self.data)
        data["seed"] = seed
        return validate_config(data)

    def with_sweep(self, sweep: dict):
        data = copy.deepcopy(self.data)
        data["sweep"] = sweep
        return validate_config(data)

    def digest(self) -> str:
        return hashlib.sha256(canonical_json(self.data).encode()).hexdigest()


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), allow_nan=False)


def validate_config(data: dict) -> ScenarioConfig:
    """Schema check plus the cross-field rules the schema cannot express."""
    if not isinstance(data, dict):
        raise ValidationError("scenario config must be a JSON object")
    errors = sorted(jsonschema.Draft202012Validator(_schema()).iter_errors(data),
                    key=lambda e: list(e.absolute_path))
    if errors:
        lines = []
        for e in errors[:5]:
            where = "/".join(str(p) for p in e.absolute_path) or "<root>"
            lines.append(f"  {where}: {e.message}")
        raise ValidationError("scenario config does not match schema "
                              f"version {SCHEMA_VERSION}:\n" + "\n".join(lines))
    cfg = ScenarioConfig(copy.deepcopy(data))
    axes = AXES[cfg.pipeline]
    if axes and "sweep" not in data:
        raise ValidationError(f"pipeline {cfg.pipeline!r} needs a sweep over one of {list(axes)}")
    if not axes and "sweep" in data:
        raise ValidationError(f"pipeline {cfg.pipeline!r} takes no sweep")
    if "sweep" in data:
        axis = data["sweep"]["axis"]
        if axis not in axes:
            raise ValidationError(f"unknown sweep axis {axis!r} for pipeline {cfg.pipeline!r}; "
                                  f"valid axes: {', '.join(axes)}")
        if "values" not in data["sweep"] and data["sweep"]["start"] > data["sweep"]["stop"]:
            raise ValidationError("sweep range is empty: start > stop")
        cfg.sweep_values()
    labels = [c["label"] for c in cfg.curves]
    if len(set(labels)) != len(labels):
        raise ValidationError(f"curve labels must be unique, got {labels}")
    if cfg.noise["kind"] != "none":
        if "level" not in cfg.noise:
            raise ValidationError("noise level is required when noise is on")
        if cfg.seed is None:
            raise ValidationError("a seed is required whenever noise is on")
    if cfg.pipeline == "truth-table":
        if "truth_table" not in data:
            raise ValidationError("truth-table pipeline needs a 'truth_table' block")
        if cfg.seed is None:
            raise ValidationError("truth-table pipeline needs a seed")
        has_att = "attenuation" in data["truth_table"]
        if has_att == (cfg.params["switch_photons"] is not None):
            raise ValidationError("give exactly one of truth_table.attenuation "
                                  "or params.switch_photons")
    return cfg


def load_config(ref) -> ScenarioConfig:
    """Built-in scenario id or path to a JSON file."""
    ref = str(ref)
    if ref in builtin_scenarios():
        text = resources.files("slowswitch").joinpath(f"data/scenarios/{ref}.json").read_text()
        source = f"built-in scenario {ref!r}"
    else:
        path = Path(ref)
        if not path.is_file():
            raise ValidationError(f"{ref!r} is neither a built-in scenario "
                                  f"({', '.join(builtin_scenarios())}) nor a readable file")
        text = path.read_text()
        source = str(path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{source} is not valid JSON: {exc}") from None
    return validate_config(data)


# -- parameter resolution -----------------------------------------------------

def _apply(params: dict, updates: dict) -> dict:
    out = dict(params)
    for key, value in updates.items():
        out[key] = value
        if key in _EXCLUSIVE and value is not None:
            out[_EXCLUSIVE[key]] = None
    return out


@dataclass(frozen=True)
class Resolved:
    medium: MediumParams
    pulse: PulseSpec
    t_d: float
    switch_duration: float


def resolve(params: dict, constants: Constants) -> Resolved:
    """MediumParams and PulseSpec from a flat parameter mapping."""
    g13 = constants.gamma13
    if params["rabi_c_sq"] is not None and params["control_photons"] is not None:
        raise ValidationError("set rabi_c_sq or control_photons, not both")
    if params["rabi_s_sq"] is not None and params["switch_photons"] is not None:
        raise ValidationError("set rabi_s_sq or switch_photons, not both")
    if params["rabi_c_sq"] is not None:
        oc2 = params["rabi_c_sq"]
    elif params["control_photons"] is not None:
        oc2 = rabi_sq_from_photons(params["control_photons"], params["control_duration"],
                                   Geometry.from_constants(constants, dipole_ratio=1.0), g13)
    else:
        oc2 = 0.0
    t_p = params["t_p"]
    t_d = params["od"] * g13 / oc2 if oc2 > 0 else 0.0
    duration = params["switch_duration"] or math.sqrt(2.0) * t_p + t_d
    if params["rabi_s_sq"] is not None:
        os2 = params["rabi_s_sq"]
    elif params["switch_photons"] is not None:
        os2 = rabi_sq_from_photons(params["switch_photons"], duration,
                                   Geometry.from_constants(constants), g13)
    else:
        os2 = 0.0
    medium = MediumParams(od=params["od"], gamma13=g13, gamma12=params["gamma12"],
                          gamma24=params["gamma24"], rabi_c_sq=oc2, rabi_s_sq=os2)
    pulse = PulseSpec(t_p=t_p, delta_probe=params["delta_p_mhz"] * MHZ,
                      photons=params["photons"])
    return Resolved(medium, pulse, t_d, duration)


def _transfer_model(params, constants):
    tm = TransferModel.default(constants)
    eff = params["transfer_eff"] or tm.transfer_eff
    n_avail = tm.n_available if params["n_available"] is None else params["n_available"]
    half = params["pump_photons_half"] or constants.pump_photons_half
    return TransferModel(transfer_eff=eff, n_available=n_avail, kappa=math.log(2.0) / half)


def _trap(params, constants):
    return TrapSpec(delta_ac_max=params["delta_ac_max_mhz"] * MHZ, waist=constants.waist,
                    depth=params["depth"], temperature=params["temperature"],
                    trap_on=params["trap_on"])


def evaluate(pipeline: str, params: dict, constants: Constants) -> float:
    """Model value of one sweep point."""
    if pipeline == "incoherent":
        return float(probe_transmission_incoherent(params["n_pump"],
                                                   _transfer_model(params, constants)))
    if pipeline == "trap":
        detuning = params["delta_p_mhz"] * MHZ
        return float(broadened_profile([detuning], params["od"], constants.gamma_e,
                                       _trap(params, constants))[0])
    r = resolve(params, constants)
    return pulse_transmission(r.pulse, r.medium, rtol=1e-10)


# -- sweeps ---------------------------------------------------------------------

@dataclass
class Table:
    header: list
    rows: list
    meta: dict = field(default_factory=dict)

    def column(self, name):
        k = self.header.index(name)
        return np.array([row[k] for row in self.rows], dtype=float)


def format_value(value) -> str:
    """Shortest round-trip decimal (``repr``), independent of locale."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError("refusing to write a non-finite value")
    return repr(value)


def format_csv(table: Table) -> str:
    lines = [",".join(table.header)]
    lines += [",".join(format_value(v) for v in row) for row in table.rows]
    return "\n".join(lines) + "\n"


def _sample(noise: dict, value: float, rng, eta: float) -> float:
    if noise["kind"] == "gaussian":
        return value + noise["level"] * rng.standard_normal()
    mean = noise["level"] * eta
    return rng.poisson(mean * value) / mean


def sweep(config: ScenarioConfig, constants: Constants | None = None) -> Table:
    """Evaluate every curve at every sweep value; rows sorted by axis value."""
    constants = constants or default_constants()
    if config.pipeline not in ("transmission", "incoherent", "trap"):
        raise ValidationError(f"pipeline {config.pipeline!r} is not a sweep")
    axis = config.data["sweep"]["axis"]
    values = config.sweep_values()
    base = config.params
    noisy = config.noise["kind"] != "none"
    eta = config.detection_efficiency(constants)
    normalize = bool(config.data.get("normalize", False))
    header = [axis]
    for c in config.curves:
        header.append(c["label"])
        if noisy:
            header.append(c["label"] + "_sampled")
    columns = []
    for i, c in enumerate(config.curves):
        curve_params = _apply(base, c.get("params", {}))
        model, sampled = [], []
        for j, v in enumerate(values):
            p = _apply(curve_params, {axis: float(v)})
            value = evaluate(config.pipeline, p, constants)
            if normalize:
                ref = evaluate(config.pipeline,
                               _apply(p, {"switch_photons": None, "rabi_s_sq": 0.0}), constants)
                value = value / ref
            model.append(value)
            if noisy:
                rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(i, j)))
                sampled.append(_sample(config.noise, value, rng, eta))
        columns.append(model)
        if noisy:
            columns.append(sampled)
    rows = [[float(v)] + [col[j] for col in columns] for j, v in enumerate(values)]
    meta = {"axis": axis, "points": int(values.size), "min": float(values[0]),
            "max": float(values[-1]), "normalized": normalize}
    return Table(header, rows, meta)


def pulse_shapes(config: ScenarioConfig, constants: Constants | None = None) -> Table:
    """Input and transmitted intensity envelopes (photons/s) per curve."""
    constants = constants or default_constants()
    base = config.params
    results, labels = [], []
    for c in config.curves:
        r = resolve(_apply(base, c.get("params", {})), constants)
        # Wide frequency span: fine time steps for plotting the envelopes.
        results.append((r, propagate_pulse(r.pulse, r.medium, Grid(span=64.0))))
        labels.append(c["label"])
    t_p = results[0][0].pulse.t_p
    t_hi = 8.0 * t_p + 4.0 * max(abs(res.delay) for _, res in results)
    summary, columns, times = {}, [], None
    for label, (r, res) in zip(labels, results):
        # Resample every curve onto the first curve's time grid.
        if times is None:
            keep = (res.times >= -8.0 * t_p) & (res.times <= t_hi)
            times = res.times[keep]
            columns.append(np.abs(res.envelope_in[keep]) ** 2)
        columns.append(np.interp(times, res.times, np.abs(res.envelope_out) ** 2))
        summary[label] = {"transmission": res.transmission, "peak_delay": res.delay,
                          "centroid_delay": res.centroid_delay, "multi_peak": res.multi_peak,
                          "analytic_t_d": r.t_d, "grid": res.grid_meta}
    header = ["time_s", "reference"] + labels
    rows = [[float(t)] + [float(col[k]) for col in columns] for k, t in enumerate(times)]
    return Table(header, rows, {"curves": summary, "points": len(rows)})


# -- truth table ------------------------------------------------------------------

@dataclass
class TruthTable:
    """Detected photon counts per (probe, switch) setting over ``trials``."""

    rows: list
    trials: int
    transmission_off: float
    transmission_on: float
    switch_photons: float

    HEADER = ("probe", "switch", "expected_mean", "mean", "std", "trials")

    def row(self, probe: bool, switch: bool) -> dict:
        for r in self.rows:
            if r["probe"] == probe and r["switch"] == switch:
                return r
        raise KeyError((probe, switch))

    def on_off_ratio(self):
        """mean(switch off) / mean(switch on) with the probe on, and its 1-sigma error."""
        off, on = self.row(True, False), self.row(True, True)
        ratio = off["mean"] / on["mean"]
        rel = math.sqrt((off["std"] / off["mean"]) ** 2 + (on["std"] / on["mean"]) ** 2)
        return ratio, ratio * rel / math.sqrt(self.trials)

    def table(self) -> Table:
        rows = [[r["probe"], r["switch"], r["expected_mean"], r["mean"], r["std"], self.trials]
                for r in self.rows]
        meta = {"transmission_off": self.transmission_off,
                "transmission_on": self.transmission_on, "switch_photons": self.switch_photons}
        return Table(list(self.HEADER), rows, meta)


def truth_table(config: ScenarioConfig, trials: int | None = None,
                constants: Constants | None = None) -> TruthTable:
    """Poisson photon counts for the four probe/switch settings.

    The switched transmission is the unswitched pulse transmission times the
    resonant switch factor ``exp(-n_s p)`` with ``p`` the per-photon switch
    exponent; ``attenuation`` fixes that factor directly.
    """
    constants = constants or default_constants()
    if config.pipeline != "truth-table":
        raise ValidationError("config is not a truth-table scenario")
    tt = config.data["truth_table"]
    trials = tt["trials"] if trials is None else trials
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    params = config.params
    r_off = resolve(_apply(params, {"switch_photons": None, "rabi_s_sq": 0.0}), constants)
    t_off = pulse_transmission(r_off.pulse, r_off.medium, rtol=1e-10)
    geom = Geometry.from_constants(constants)
    if "attenuation" in tt:
        n_s = switch_threshold(tt["attenuation"], r_off.pulse.t_p, r_off.t_d, r_off.medium.od, geom)
    else:
        n_s = params["switch_photons"]
    factor = math.exp(-n_s * _switch_exponent_per_photon(r_off.pulse.t_p, r_off.t_d, geom))
    t_on = t_off * factor
    eta = config.detection_efficiency(constants)
    background = tt.get("background", 0.0)
    rows = []
    settings = [(False, False), (False, True), (True, False), (True, True)]
    for k, (probe, switch) in enumerate(settings):
        mean = background
        if probe:
            mean += tt["probe_photons"] * (t_on if switch else t_off) * eta
        rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(k,)))
        counts = rng.poisson(mean, size=trials)
        rows.append({"probe": probe, "switch": switch, "expected_mean": mean,
                     "mean": float(counts.mean()),
                     "std": float(counts.std(ddof=1)) if trials > 1 else 0.0})
    return TruthTable(rows, trials, t_off, t_on, float(n_s))


# -- driver ----------------------------------------------------------------------

def _versions():
    def version(name):
        try:
            return metadata.version(name)
        except metadata.PackageNotFoundError:
            return None
    return {"slowswitch": __version__, "python": platform.python_version(),
            "numpy": version("numpy"), "scipy": version("scipy"), "numba": version("numba"),
            "matplotlib": version("matplotlib"), "jsonschema": version("jsonschema"),
            "kernels": "numba" if _accel.USE_NUMBA else "numpy"}


def compute(config: ScenarioConfig, constants: Constants | None = None) -> Table:
    constants = constants or default_constants()
    if config.pipeline == "pulse":
        return pulse_shapes(config, constants)
    if config.pipeline == "truth-table":
        return truth_table(config, constants=constants).table()
    return sweep(config, constants)


def _check_out_dir(out_dir: Path):
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ValidationError(f"cannot create output directory {out_dir}: {exc.strerror}; "
                              "choose a writable --out-dir") from None
    if not os.access(out_dir, os.W_OK):
        raise ValidationError(f"output directory {out_dir} is not writable; "
                              "choose a writable --out-dir")


def run_scenario(config: ScenarioConfig, out_dir, fmt="both",
                 constants: Constants | None = None) -> dict:
    """Write ``<stem>.csv`` and/or ``<stem>.svg`` plus ``<stem>.manifest.json``.

    Files are written to temporaries and renamed at the end, so a failure
    leaves no partial output.  Returns the written paths by kind.
    """
    if fmt not in ("csv", "svg", "both"):
        raise ValidationError(f"format must be csv, svg or both, got {fmt!r}")
    constants = constants or default_constants()
    out_dir = Path(out_dir)
    _check_out_dir(out_dir)
    table = compute(config, constants)
    outputs = {}
    staged = []
    try:
        if fmt in ("csv", "both"):
            staged.append(("csv", _stage(out_dir, format_csv(table).encode())))
        if fmt in ("svg", "both"):
            from .plotting import render_svg
            staged.append(("svg", _stage(out_dir, render_svg(config, table))))
        manifest = {
            "scenario": config.scenario,
            "schema_version": SCHEMA_VERSION,
            "config_sha256": config.digest(),
            "config": config.data,
            "constants": {k: v for k, v in vars(constants).items()},
            "seed": config.seed,
            "versions": _versions(),
            "grid": table.meta,
            "files": {},
        }
        for kind, tmp in staged:
            manifest["files"][kind] = {"name": f"{config.stem}.{kind}",
                                       "sha256": hashlib.sha256(tmp.read_bytes()).hexdigest()}
        text = json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n"
        staged.append(("manifest", _stage(out_dir, text.encode())))
        for kind, tmp in staged:
            name = f"{config.stem}.manifest.json" if kind == "manifest" else f"{config.stem}.{kind}"
            final = out_dir / name
            os.replace(tmp, final)
            outputs[kind] = final
    except BaseException:
        for _, tmp in staged:
            tmp.unlink(missing_ok=True)
        for path in outputs.values():
            path.unlink(missing_ok=True)
        raise
    return outputs


def _stage(out_dir: Path, payload: bytes) -> Path:
    fd, name = tempfile.mkstemp(dir=out_dir, prefix=".partial-")
    with os.fdopen(fd, "wb") as fh:
        fh.write(payload)
    return Path(name)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")
