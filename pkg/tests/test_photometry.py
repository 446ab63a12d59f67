import math

import pytest

from slowswitch.constants import load_constants
from slowswitch.errors import ValidationError
from slowswitch.photometry import (Geometry, atoms_from_od, calibrated_sigma_ratio, ensemble,
                                   interaction_probability, od_from_atoms, photons_from_rabi_sq,
                                   projected_threshold, rabi_sq_from_photons,
                                   resonant_cross_section)


def test_cross_section():
    assert resonant_cross_section(1.0) == pytest.approx(3 / (2 * math.pi))


@pytest.mark.parametrize("atoms,od", [(0, 0.0), (100, 1.0), (3000, 30.0)])
def test_calibrated_atom_numbers(geom, atoms, od):
    assert od_from_atoms(ensemble(atoms, geom), geom) == pytest.approx(od, rel=1e-12)


def test_atoms_from_od_inverts(geom):
    ratio = calibrated_sigma_ratio(geom)
    assert atoms_from_od(17.5, geom, ratio) == pytest.approx(1750.0, rel=1e-12)


def test_explicit_sigma_ratio_wins(tmp_path, geom):
    path = tmp_path / "c.json"
    path.write_text('{"sigma_ratio": 0.5}')
    c = load_constants(path)
    ens = ensemble(100, geom, c)
    assert ens.sigma_ratio == 0.5
    assert od_from_atoms(ens, geom) == pytest.approx(
        2 * 100 * 0.5 * resonant_cross_section(geom.wavelength) / geom.area)


def test_impossible_calibration():
    g = Geometry(wavelength=1e-6, waist=1e-3)
    with pytest.raises(ValidationError):
        calibrated_sigma_ratio(g, atoms_per_unit_od=1.0)


def test_rabi_photon_round_trip(geom, g13):
    oc2 = rabi_sq_from_photons(3500, 1e-6, geom, g13)
    assert photons_from_rabi_sq(oc2, 1e-6, geom, g13) == pytest.approx(3500, rel=1e-14)
    # linear in flux
    assert rabi_sq_from_photons(7000, 1e-6, geom, g13) == pytest.approx(2 * oc2)
    assert rabi_sq_from_photons(3500, 2e-6, geom, g13) == pytest.approx(oc2 / 2)


def test_dipole_ratio_scales_quadratically(g13):
    a = Geometry(wavelength=795e-9, waist=1.9e-6)
    b = Geometry(wavelength=795e-9, waist=1.9e-6, dipole_ratio=0.5)
    assert rabi_sq_from_photons(10, 1e-6, b, g13) == pytest.approx(
        0.25 * rabi_sq_from_photons(10, 1e-6, a, g13))
    with pytest.raises(ValidationError):
        photons_from_rabi_sq(1.0, 1e-6, Geometry(795e-9, 1.9e-6, 0.0), g13)


def test_projected_thresholds():
    g = Geometry(wavelength=795e-9, waist=1.9e-6)
    assert projected_threshold("baseline", 3.0, g) == pytest.approx(g.area_over_lambda_sq)
    assert projected_threshold("copropagating-slow", 100.0, g) == pytest.approx(1.79, abs=0.01)
    assert projected_threshold("stationary", 1e6, g) == 1.0
    with pytest.raises(ValidationError):
        projected_threshold("other", 1.0, g)


def test_interaction_probability_is_od_per_atom(geom):
    ens = ensemble(100, geom)
    assert interaction_probability(geom, ens) == pytest.approx(0.01, rel=1e-12)


@pytest.mark.parametrize("kw", [dict(wavelength=0.0), dict(waist=-1.0), dict(dipole_ratio=-1.0)])
def test_geometry_validation(kw):
    args = dict(wavelength=795e-9, waist=1.9e-6)
    args.update(kw)
    with pytest.raises(ValidationError):
        Geometry(**args)


def test_photon_conversion_reproduces_switch_exponent(rng, g13):
    # od Im f(0) with Os^2 from photons over sqrt2 t_p + t_d equals the
    # closed-form switch exponent when g13 = g24 and t_d = od g13 / Oc^2.
    from slowswitch.propagation import _switch_exponent_per_photon
    from slowswitch.response import MediumParams, complex_response
    for _ in range(50):
        g = Geometry(wavelength=795e-9, waist=rng.uniform(1e-6, 5e-6),
                     dipole_ratio=rng.uniform(0.3, 1.5))
        od = rng.uniform(1, 50)
        t_p = rng.uniform(50e-9, 1e-6)
        oc2 = g13 ** 2 * 10 ** rng.uniform(0, 2)
        t_d = od * g13 / oc2
        n = rng.uniform(0, 5)
        os2 = rabi_sq_from_photons(n, math.sqrt(2) * t_p + t_d, g, g13)
        m = MediumParams(od=od, gamma13=g13, gamma12=0.0, rabi_c_sq=oc2, rabi_s_sq=os2)
        exact = od * g13 * os2 / (g13 * oc2)
        assert exact == pytest.approx(n * _switch_exponent_per_photon(t_p, t_d, g), rel=1e-12)
        # and the response agrees with its leading order when Os^2 << Oc^2
        if os2 < 1e-4 * oc2:
            assert od * complex_response(0.0, 0.0, m).imag == pytest.approx(exact, rel=1e-3)


def test_unit_cross_section_probability():
    from slowswitch.photometry import EnsembleSpec
    g = Geometry(wavelength=795e-9, waist=1.9e-6)
    p = interaction_probability(g, EnsembleSpec(n_eff=1, sigma_ratio=1.0))
    assert p == pytest.approx(3 * 795e-9 ** 2 / (math.pi ** 2 * 1.9e-6 ** 2))
    assert p == pytest.approx(0.053, abs=0.001)
