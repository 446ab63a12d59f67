import math

import numpy as np
import pytest

from slowswitch.errors import SingularParameterError, ValidationError
from slowswitch.response import (MediumParams, analytic_group_delay, complex_response,
                                 cw_resonant_transmission, feature_width,
                                 natural_line_transmission, rabi_c_sq_for_delay,
                                 response_poles)


def test_two_level_limit_matches_lorentzian(g13):
    gamma_e = 2 * g13
    delta = np.linspace(-10 * gamma_e, 10 * gamma_e, 801)
    for od in (0.5, 4.0):
        m = MediumParams.two_level(od, g13)
        t = np.exp(-od * complex_response(delta, 0.0, m).imag)
        np.testing.assert_allclose(t, natural_line_transmission(delta, od, gamma_e), rtol=1e-12)


def test_ideal_eit_is_transparent_on_resonance(g13):
    m = MediumParams(od=50.0, gamma13=g13, rabi_c_sq=g13 ** 2)
    assert complex_response(0.0, 0.0, m) == 0
    assert cw_resonant_transmission(m) == 1.0


def test_ground_decoherence_gives_resonant_absorption(g13):
    m = MediumParams(od=10.0, gamma13=g13, gamma12=0.01 * g13, rabi_c_sq=g13 ** 2)
    # f(0) = 4 g12 g13 / (4 g12 g13 + Oc^2) on resonance without the switch
    expected = 4 * 0.01 * g13 ** 2 / (4 * 0.01 * g13 ** 2 + g13 ** 2)
    assert complex_response(0.0, 0.0, m).imag == pytest.approx(expected, rel=1e-12)


def test_switch_field_restores_absorption(g13):
    base = MediumParams(od=10.0, gamma13=g13, rabi_c_sq=g13 ** 2)
    on = base.with_(rabi_s_sq=0.05 * g13 ** 2)
    assert cw_resonant_transmission(on) < cw_resonant_transmission(base)


def test_carrier_and_sideband_enter_as_a_sum(g13):
    m = MediumParams(od=3.0, gamma13=g13, gamma12=1e-3 * g13, rabi_c_sq=2 * g13 ** 2,
                     rabi_s_sq=0.1 * g13 ** 2)
    w = np.linspace(-g13, g13, 11)
    np.testing.assert_array_equal(complex_response(w, 0.3 * g13, m),
                                  complex_response(w + 0.3 * g13, 0.0, m))


def test_exactly_singular_point_raises():
    m = MediumParams(od=1.0, gamma13=1.0, gamma12=0.0)
    with pytest.raises(SingularParameterError):
        complex_response(0.0, 0.0, m)


@pytest.mark.parametrize("kw", [dict(od=-1.0), dict(gamma12=-1.0), dict(rabi_c_sq=float("nan")),
                                dict(od=1.0, gamma13=0.0)])
def test_medium_validation(kw):
    args = dict(od=1.0, gamma13=1.0)
    args.update(kw)
    with pytest.raises(ValidationError):
        MediumParams(**args)


def test_gamma24_defaults_to_gamma13():
    assert MediumParams(od=1.0, gamma13=3.0).gamma24 == 3.0


def test_natural_line_rejects_bad_width():
    with pytest.raises(ValidationError):
        natural_line_transmission(0.0, 1.0, 0.0)


def test_delay_and_inverse(g13):
    oc2 = rabi_c_sq_for_delay(100e-9, 3.0, g13, kappa=1.0)
    m = MediumParams(od=3.0, gamma13=g13, rabi_c_sq=oc2)
    assert analytic_group_delay(m, kappa=1.0) == pytest.approx(100e-9, rel=1e-14)
    assert analytic_group_delay(m) == pytest.approx(200e-9, rel=1e-14)


def test_delay_preconditions(g13):
    with pytest.raises(ValidationError):
        analytic_group_delay(MediumParams(od=3.0, gamma13=g13))
    m = MediumParams(od=3.0, gamma13=g13, gamma12=1.0, rabi_c_sq=g13 ** 2)
    with pytest.raises(ValidationError):
        analytic_group_delay(m)
    assert analytic_group_delay(m, ideal_only=False) > 0


def test_poles_are_roots_of_the_denominator(g13):
    m = MediumParams(od=3.0, gamma13=g13, gamma12=1e-2 * g13, rabi_c_sq=3 * g13 ** 2,
                     rabi_s_sq=0.2 * g13 ** 2)
    poles = response_poles(m)
    assert poles.size == 3
    assert np.all(poles.imag < 0)
    for p in poles:
        d12, d13, d24 = p + 1j * m.gamma12, p + 1j * g13, p + 1j * m.gamma24
        den = d24 * (4 * d12 * d13 - m.rabi_c_sq) - d13 * m.rabi_s_sq
        assert abs(den) < 1e-9 * abs(4 * p ** 3)


def test_eit_window_is_the_narrowest_feature(g13):
    wide = MediumParams(od=1.0, gamma13=g13, rabi_c_sq=g13 ** 2)
    narrow = wide.with_(rabi_c_sq=1e-2 * g13 ** 2)
    assert feature_width(narrow) < feature_width(wide)
    # window half width ~ Oc^2 / (4 g13) for a weak control
    assert feature_width(narrow) == pytest.approx(1e-2 * g13 / 4 / math.sqrt(2), rel=0.05)


def test_weak_switch_series(g13):
    # gamma12 = 0, on resonance: Im f = g13 Os^2 / (g24 Oc^2) + O(Os^4)
    oc2 = 2 * g13 ** 2
    m = MediumParams(od=1.0, gamma13=g13, gamma12=0.0, gamma24=0.7 * g13, rabi_c_sq=oc2,
                     rabi_s_sq=1e-3 * oc2)
    lead = g13 * m.rabi_s_sq / (m.gamma24 * oc2)
    assert complex_response(0.0, 0.0, m).imag == pytest.approx(lead, rel=5e-3)
