"""Command line front end.

Exit codes: 0 success, 1 validation error (bad config, arguments or paths),
2 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .constants import load_constants
from .errors import NumericalError, ValidationError
from . import scenarios

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2


def _common(p):
    p.add_argument("--seed", type=int, default=None, help="root seed (overrides the config)")
    p.add_argument("--out-dir", default=".", help="output directory (default: .)")
    p.add_argument("--format", choices=("csv", "svg", "both"), default="both")
    p.add_argument("--constants", default=None, help="JSON file overriding packaged constants")


def build_parser():
    ap = argparse.ArgumentParser(prog="slowswitch",
                                 description="Few-photon EIT / optical switch simulator")
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("simulate", help="run a scenario (built-in id or config path)")
    p.add_argument("scenario")
    _common(p)

    p = sub.add_parser("sweep", help="run a scenario with a replaced sweep axis")
    p.add_argument("scenario")
    p.add_argument("--axis", required=True)
    grid = p.add_mutually_exclusive_group(required=True)
    grid.add_argument("--values", type=float, nargs="+")
    grid.add_argument("--range", type=float, nargs=2, metavar=("START", "STOP"))
    p.add_argument("--num", type=int, default=51)
    p.add_argument("--log", action="store_true", help="geometric spacing")
    _common(p)

    p = sub.add_parser("fit", help="fit a spectrum CSV and write a JSON report")
    p.add_argument("csv", help="columns detuning_hz,transmission,stderr")
    p.add_argument("--model", choices=("two-level", "eit", "n-scheme"), default="eit")
    p.add_argument("--t-p", type=float, default=150e-9, help="probe rms width (s)")
    p.add_argument("--report", default=None, help="report path (default: <csv stem>.fit.json)")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--constants", default=None)

    p = sub.add_parser("truth-table", help="Monte-Carlo switch truth table")
    p.add_argument("scenario", nargs="?", default="fig4e")
    p.add_argument("--trials", type=int, default=None)
    _common(p)

    p = sub.add_parser("validate-config", help="check a scenario config against the schema")
    p.add_argument("scenario")
    return ap


def _load(args):
    cfg = scenarios.load_config(args.scenario)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _constants(args):
    return load_constants(args.constants) if getattr(args, "constants", None) else None


def _report(outputs):
    for kind, path in outputs.items():
        print(f"{kind}: {path}")


def cmd_simulate(args):
    outputs = scenarios.run_scenario(_load(args), args.out_dir, args.format, _constants(args))
    _report(outputs)


def cmd_sweep(args):
    cfg = _load(args)
    if args.values is not None:
        sw = {"axis": args.axis, "values": args.values}
    else:
        sw = {"axis": args.axis, "start": args.range[0], "stop": args.range[1], "num": args.num,
              "spacing": "log" if args.log else "linear"}
    cfg = cfg.with_sweep(sw)
    _report(scenarios.run_scenario(cfg, args.out_dir, args.format, _constants(args)))


def cmd_truth_table(args):
    cfg = _load(args)
    if args.trials is not None:
        data = dict(cfg.data)
        data["truth_table"] = {**data["truth_table"], "trials": args.trials}
        cfg = scenarios.validate_config(data)
    if cfg.pipeline != "truth-table":
        raise ValidationError(f"scenario {cfg.scenario!r} is not a truth-table scenario")
    outputs = scenarios.run_scenario(cfg, args.out_dir, args.format, _constants(args))
    table = scenarios.truth_table(cfg, constants=_constants(args))
    ratio, err = table.on_off_ratio()
    print(f"on/off ratio: {ratio:.4f} +- {err:.4f}")
    _report(outputs)


def cmd_fit(args):
    from .fitting import fit_spectrum, read_spectrum_csv, write_fit_report
    from .constants import default_constants

    constants = _constants(args) or default_constants()
    data = read_spectrum_csv(args.csv, t_p=args.t_p, model=args.model)
    result = fit_spectrum(data, gamma13=constants.gamma13)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = Path(args.report) if args.report else out_dir / (Path(args.csv).stem + ".fit.json")
    write_fit_report(result, path)
    print(json.dumps({k: result.params[k] for k in result.names}, sort_keys=True))
    print(f"report: {path}")
    if not result.converged:
        print(f"warning: fit did not converge ({result.message})", file=sys.stderr)


def cmd_validate(args):
    cfg = scenarios.load_config(args.scenario)
    print(f"ok: {cfg.scenario} (pipeline {cfg.pipeline}, schema {scenarios.SCHEMA_VERSION})")


COMMANDS = {"simulate": cmd_simulate, "sweep": cmd_sweep, "fit": cmd_fit,
            "truth-table": cmd_truth_table, "validate-config": cmd_validate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.verb](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
