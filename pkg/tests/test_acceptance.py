"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Tolerances and runtime budgets are the stated ones; nothing is relaxed here.
Run alone with ``pytest -m acceptance -s``.
"""
import csv
import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import optimize, stats

from slowswitch import scenarios
from slowswitch.constants import default_constants
from slowswitch.errors import SingularFitError
from slowswitch.fitting import (MODELS, Noise, fit_spectrum, suggest_design,
                                synthesize_spectrum)
from slowswitch.incoherent import TransferModel, atoms_transferred, probe_transmission_incoherent
from slowswitch.photometry import Geometry, ensemble, od_from_atoms, projected_threshold
from slowswitch.propagation import (VALIDITY_COLUMNS, PulseSpec, propagate_pulse,
                                    pulse_transmission, switch_threshold, validity_map)
from slowswitch.response import (MediumParams, analytic_group_delay, complex_response,
                                 natural_line_transmission)
from slowswitch.trap import TrapSpec, broadened_profile, broadened_profile_mc

pytestmark = pytest.mark.acceptance

ARTIFACTS = Path(__file__).resolve().parents[1] / "artifacts"
C = default_constants()
G13 = C.gamma13
MHZ = 2 * math.pi * 1e6


class Check:
    """Timer plus the one-line verdict printed for each criterion."""

    def __init__(self, capsys, number, title, budget):
        self.capsys = capsys
        self.number = number
        self.title = title
        self.budget = budget
        self.start = time.perf_counter()

    def finish(self, ok, detail):
        elapsed = time.perf_counter() - self.start
        in_time = elapsed < self.budget
        verdict = "PASS" if ok and in_time else "FAIL"
        with self.capsys.disabled():
            print(f"\n[{verdict}] criterion {self.number}: {self.title}: {detail}; "
                  f"{elapsed:.2f} s (budget {self.budget:g} s)")
        assert ok, detail
        assert in_time, f"took {elapsed:.1f} s, budget {self.budget} s"


def test_criterion_1_two_level_reduction(capsys):
    chk = Check(capsys, 1, "two-level reduction", 1.0)
    gamma_e = C.gamma_e
    m0 = MediumParams(od=1.0, gamma13=gamma_e / 2, gamma12=gamma_e / 2, gamma24=gamma_e / 2)
    delta = np.linspace(-10 * gamma_e, 10 * gamma_e, 2001)
    worst = 0.0
    for od in (1.0, 3.0, 30.0):
        m = m0.with_(od=od)
        t = np.exp(-od * complex_response(delta, 0.0, m).imag)
        ref = natural_line_transmission(delta, od, gamma_e)
        worst = max(worst, float(np.max(np.abs(t / ref - 1))))
    chk.finish(worst <= 1e-12, f"max relative deviation {worst:.2e} (tol 1e-12)")


def test_criterion_2_route_equivalence(capsys):
    chk = Check(capsys, 2, "quadrature vs transform propagation", 60.0)
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(200):
        t_p = 10 ** rng.uniform(math.log10(50e-9), -6)
        oc2 = G13 ** 2 * 10 ** rng.uniform(-2, 2)
        m = MediumParams(od=rng.uniform(0.5, 50), gamma13=G13, gamma12=G13 * rng.uniform(0, 0.1),
                         rabi_c_sq=oc2, rabi_s_sq=oc2 * rng.uniform(0, 0.2))
        pulse = PulseSpec(t_p=t_p, delta_probe=G13 * rng.uniform(-3, 3))
        quad = pulse_transmission(pulse, m, rtol=1e-10)
        fft = propagate_pulse(pulse, m).transmission
        worst = max(worst, abs(quad - fft))
    chk.finish(worst <= 1e-6, f"200 draws, max |dT| {worst:.2e} (tol 1e-6)")


def test_criterion_3_closed_form_validity_map(capsys):
    chk = Check(capsys, 3, "closed-form switch validity map", 300.0)
    rows, best = validity_map(G13, 150e-9, Geometry.from_constants(C))
    ARTIFACTS.mkdir(exist_ok=True)
    with open(ARTIFACTS / "validity_map.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(VALIDITY_COLUMNS + ("best_kappa",))
        for r in rows:
            writer.writerow([repr(float(r[k])) for k in VALIDITY_COLUMNS] + [repr(best)])
    chosen = [r for r in rows if r["kappa"] == best]
    worst = max(chosen, key=lambda r: r["rel_deviation"])
    inside = sum(r["rel_deviation"] <= 0.10 for r in chosen)
    detail = (f"best kappa {best:g}, {inside}/{len(chosen)} points within 10%, worst "
              f"{worst['rel_deviation']:.1%} at OD {worst['od']:g}, t_d/t_p "
              f"{worst['td_over_tp']:g}; map in artifacts/validity_map.csv")
    chk.finish(worst["rel_deviation"] <= 0.10, detail)


def test_criterion_4_group_delay(capsys):
    chk = Check(capsys, 4, "group delay", 10.0)
    worst = 0.0
    for od in (3.0, 10.0, 30.0):
        for ratio in (0.05, 0.1, 0.2):
            m = MediumParams(od=od, gamma13=G13, rabi_c_sq=4 * G13 ** 2)
            t_d = analytic_group_delay(m)
            res = propagate_pulse(PulseSpec(t_p=t_d / ratio), m)
            worst = max(worst, abs(res.delay / t_d - 1))

    def delay_minus_target(log_oc2):
        m = MediumParams(od=3.0, gamma13=G13, rabi_c_sq=math.exp(log_oc2))
        return propagate_pulse(PulseSpec(t_p=150e-9), m).delay - 100e-9

    # analytic delays 150 ns .. 50 ns bracket a 100 ns propagated delay
    lo, hi = (math.log(2 * 3.0 * G13 / t) for t in (150e-9, 50e-9))
    log_oc2 = optimize.brentq(delay_minus_target, lo, hi, xtol=1e-10)
    delay = delay_minus_target(log_oc2) + 100e-9
    v_g = 0.3e-3 / delay
    ok = worst <= 0.05 and abs(delay - 100e-9) <= 1e-9 and abs(v_g / 3e3 - 1) <= 0.10
    chk.finish(ok, f"narrowband max deviation from 2 OD g13/Oc^2 {worst:.2e} (tol 5%); "
                   f"100 ns at OD 3, t_p 150 ns for Oc/g13 = "
                   f"{math.sqrt(math.exp(log_oc2)) / G13:.3f}; v_g = {v_g / 1e3:.3f} km/s")


def test_criterion_5_calibration_anchors(capsys):
    chk = Check(capsys, 5, "calibration anchors", 1.0)
    geom = Geometry.from_constants(C)
    od100 = od_from_atoms(ensemble(100, geom), geom)
    od3000 = od_from_atoms(ensemble(3000, geom), geom)
    tm = TransferModel.default(C)
    t300 = probe_transmission_incoherent(300, tm)
    moved = atoms_transferred(300, tm)
    ratio = (switch_threshold(0.1, 150e-9, 100e-9, 3.0, geom)
             / switch_threshold(0.5, 150e-9, 100e-9, 3.0, geom))
    ok = (math.isclose(od100, 1.0, rel_tol=1e-12) and math.isclose(od3000, 30.0, rel_tol=1e-12)
          and abs(t300 - 0.5) <= 0.005 and math.isclose(moved, 150.0, rel_tol=1e-12)
          and abs(ratio - 3.32) <= 0.01)
    chk.finish(ok, f"OD(100) {od100:.12g}, OD(3000) {od3000:.12g}, T(300 pump) {t300:.4f}, "
                   f"{moved:g} atoms moved, N90/N50 {ratio:.4f}")


def test_criterion_6_threshold_arithmetic(capsys):
    chk = Check(capsys, 6, "threshold arithmetic", 1.0)
    geom = Geometry(wavelength=795e-9, waist=1.9e-6, dipole_ratio=1.0)
    # t_d >> t_p
    n_e = switch_threshold(math.exp(-1), 1e-9, 1.0, 3.0, geom)
    projected = projected_threshold("copropagating-slow", 100.0, geom)
    ok = abs(n_e - 18.8) <= 0.1 and abs(projected - 1.79) <= 0.01
    chk.finish(ok, f"1/e threshold {n_e:.3f} photons, (pi/3) A/lambda^2 = "
                   f"{math.pi / 3 * geom.area_over_lambda_sq:.3f}, OD 100 projection "
                   f"{projected:.4f}")


def _round_trip_draw(rng, model):
    """Truth drawn from the stated ranges; N-scheme draws keep the window open."""
    while True:
        od = rng.uniform(1, 50)
        oc2 = (G13 * rng.uniform(0.5, 20)) ** 2
        g12 = G13 * rng.uniform(0, 0.1)
        floor = 4 * g12 * G13 + oc2
        if model == "eit" or od * 4 * g12 * G13 / floor <= 3.0:
            break
    os2 = rng.uniform(0.1, 1.0) * floor / od if model == "n-scheme" else 0.0
    return MediumParams(od=od, gamma13=G13, gamma12=g12, rabi_c_sq=oc2, rabi_s_sq=os2)


def _round_trips(model, rng):
    failures, worst = 0, 0.0
    for _ in range(100):
        m = _round_trip_draw(rng, model)
        t_p, det = suggest_design(m)
        data = synthesize_spectrum(m, t_p, det, model=model)
        truth = {k: getattr(m, k) for k in MODELS[model]}
        init = {k: v * (1 + 0.3 * rng.choice([-1, 1])) for k, v in truth.items()}
        try:
            fit = fit_spectrum(data, init, gamma13=G13)
            rel = max(abs(fit.params[k] / v - 1) for k, v in truth.items())
        except SingularFitError:
            rel = math.inf
        worst = max(worst, rel)
        failures += rel > 1e-6
    return failures, worst


def _noise_monte_carlo():
    m = MediumParams(od=5.0, gamma13=G13, gamma12=0.1 * G13, rabi_c_sq=4 * G13 ** 2)
    t_p, det = suggest_design(m, 64)
    truth = {k: getattr(m, k) for k in MODELS["eit"]}
    stat, trials, ratios = 0.0, 100, []
    for i in range(trials):
        data = synthesize_spectrum(m, t_p, det, model="eit", noise=Noise("gaussian", 0.05),
                                   seed=np.random.SeedSequence(1234, spawn_key=(i,)))
        fit = fit_spectrum(data, truth, gamma13=G13)
        x = np.log([fit.params[k] / truth[k] for k in fit.names])
        stat += x @ np.linalg.solve(fit.log_covariance, x)
        ratios.append(np.exp(x))
    dof = trials * len(truth)
    lo, hi = stats.chi2.ppf([0.025, 0.975], dof)
    median_dev = float(np.max(np.abs(np.median(ratios, axis=0) - 1)))
    return stat, lo, hi, median_dev


def test_criterion_7_fit_round_trip(capsys):
    chk = Check(capsys, 7, "fit round trip", 300.0)
    rng = np.random.default_rng(7)
    eit_fail, eit_worst = _round_trips("eit", rng)
    ns_fail, ns_worst = _round_trips("n-scheme", rng)
    stat, lo, hi, median_dev = _noise_monte_carlo()
    ok = eit_fail == 0 and ns_fail == 0 and lo <= stat <= hi and median_dev <= 0.10
    chk.finish(ok, f"EIT {100 - eit_fail}/100 (worst {eit_worst:.1e}), N-scheme "
                   f"{100 - ns_fail}/100 (worst {ns_worst:.1e}); 5% noise: "
                   f"medians within {median_dev:.1%} of truth, sum d^T C^-1 d = {stat:.1f} "
                   f"vs chi2_300 95% [{lo:.1f}, {hi:.1f}]")


def test_criterion_8_determinism(capsys, tmp_path):
    chk = Check(capsys, 8, "determinism", 120.0)
    differing = []
    for name in scenarios.builtin_scenarios():
        cfg = scenarios.load_config(name)
        a = scenarios.run_scenario(cfg, tmp_path / "a", fmt="csv")["csv"].read_bytes()
        b = scenarios.run_scenario(scenarios.load_config(name), tmp_path / "b",
                                   fmt="csv")["csv"].read_bytes()
        if a != b:
            differing.append(name)
    table = scenarios.truth_table(scenarios.load_config("fig4e"), trials=10_000)
    ratio, err = table.on_off_ratio()
    ok = not differing and abs(ratio - math.e) <= 3 * err
    chk.finish(ok, f"{len(scenarios.builtin_scenarios())} scenarios, differing: "
                   f"{differing or 'none'}; on/off ratio {ratio:.4f} +- {err:.4f} "
                   f"(|r - e| = {abs(ratio - math.e) / err:.2f} sigma)")


def test_criterion_9_trap_oracle(capsys):
    chk = Check(capsys, 9, "trap spectroscopy oracle", 60.0)
    trap = TrapSpec(delta_ac_max=40 * MHZ, waist=C.waist, depth=0.01, temperature=0.001)
    od = 30.0
    det = np.array([-20.0, 10.0, 30.0, 40.0, 60.0]) * MHZ
    quad = broadened_profile(det, od, C.gamma_e, trap)
    mc = broadened_profile_mc(det, od, C.gamma_e, trap, n_samples=4_000_000, seed=9)
    mc_dev = float(np.max(np.abs(mc / quad - 1)))
    grid = np.linspace(-60, 100, 33) * MHZ
    rigid = natural_line_transmission(grid - trap.delta_ac_max, od, C.gamma_e)
    # Residual broadening scales as T / depth; follow it down to the limit.
    cold_devs = []
    for temperature in (1e-9, 1e-10, 1e-11):
        cold = TrapSpec(delta_ac_max=trap.delta_ac_max, waist=C.waist, depth=0.01,
                        temperature=temperature)
        prof = broadened_profile(grid, od, C.gamma_e, cold)
        cold_devs.append(float(np.max(np.abs(prof / rigid - 1))))
    cold_dev = cold_devs[-1]
    converging = all(b < a for a, b in zip(cold_devs, cold_devs[1:]))
    ok = mc_dev <= 0.01 and cold_dev <= 1e-6 and converging
    chk.finish(ok, f"quadrature vs MC max relative {mc_dev:.2e} (tol 1e-2); "
                   f"T -> 0 vs shifted natural line "
                   f"{', '.join(f'{d:.1e}' for d in cold_devs)} at 1, 0.1, 0.01 nK (tol 1e-6)")
