import numpy as np
import pytest
from oracles import R0, ff0, mp_sigma, sigma0

from waveforce.diagnostics import (
    bernoulli,
    diagnostic_curve,
    kappa,
    kappa_derivative,
    laminar_flow_force,
    sigma,
    sigma_derivative,
)
from waveforce.errors import DomainError
from waveforce.laminar import conjugate_streams
from waveforce.vorticity import VorticityModel

IRROT = VorticityModel.constant(0.0)
SHEAR = VorticityModel.constant(-1.0)


def test_sigma_closed_form():
    assert sigma(IRROT, 1.0, 1.5) == pytest.approx(1.5, abs=1e-13)
    for s, r in ((0.4, 2.0), (1.3, 1.7), (3.0, 5.0)):
        assert sigma(IRROT, s, r) == pytest.approx(sigma0(s, r), abs=1e-12)


def test_sigma_reduced_form_against_unreduced_integral():
    # the package evaluates a reduced form; mpmath integrates the defining integral
    for m, s, r in ((SHEAR, 0.8, 2.0), (VorticityModel.affine(0.5, -1.5), 1.4, 2.2)):
        oracle = mp_sigma(lambda p, m=m: m.a * p + 0.5 * m.b * p * p if m.kind == "affine" else m.b * p, s, r)
        assert sigma(m, s, r) == pytest.approx(oracle, abs=1e-11)


def test_sigma_at_conjugates():
    pair = conjugate_streams(IRROT, 2.0)
    assert sigma(IRROT, pair.s_minus, 2.0) == pytest.approx(2.259, abs=1e-3)
    assert sigma(IRROT, pair.s_plus, 2.0) == pytest.approx(1.853, abs=1e-3)


def test_sigma_derivative_example():
    expected = -1.2 * (2 - R0(1.2)) * 1.2**-3
    assert sigma_derivative(IRROT, 1.2, 2.0) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(-0.3102, abs=1e-4)
    h = 1e-5
    fd = (sigma(IRROT, 1.2 + h, 2.0) - sigma(IRROT, 1.2 - h, 2.0)) / (2 * h)
    assert sigma_derivative(IRROT, 1.2, 2.0) == pytest.approx(fd, abs=1e-6)


def test_kappa_examples():
    assert kappa(IRROT, 1.0, 2.0, 1.9) == pytest.approx(-0.45, abs=1e-12)
    pair = conjugate_streams(SHEAR, 2.2)
    assert kappa(SHEAR, pair.s_plus, 2.2, pair.ff_minus) == pytest.approx(0.0, abs=1e-12)
    assert kappa(SHEAR, pair.s_minus, 2.2, 7.0) == pytest.approx(2 * (7.0 - pair.ff_plus), abs=1e-12)
    # the identity kappa(s_+; r, FF) = 2 (FF - FF_-) carries the factor 2 of the definition
    assert kappa(SHEAR, pair.s_plus, 2.2, 7.0) == pytest.approx(2 * (7.0 - pair.ff_minus), abs=1e-12)


def test_kappa_derivative():
    assert kappa_derivative(IRROT, 1.0, 2.0) == pytest.approx(1.0, abs=1e-13)
    h = 1e-5
    fd = (kappa(IRROT, 1 + h, 2.0, 0.0) - kappa(IRROT, 1 - h, 2.0, 0.0)) / (2 * h)
    assert kappa_derivative(IRROT, 1.0, 2.0) == pytest.approx(fd, abs=1e-6)
    pair = conjugate_streams(SHEAR, 2.2)
    assert kappa_derivative(SHEAR, pair.s_plus, 2.2) == pytest.approx(0.0, abs=1e-10)


def test_laminar_flow_force():
    assert laminar_flow_force(IRROT, 1.0) == pytest.approx(1.5, abs=1e-13)
    assert laminar_flow_force(IRROT, 2.0) == pytest.approx(2.125, abs=1e-13)
    assert laminar_flow_force(IRROT, 0.7) == pytest.approx(ff0(0.7), abs=1e-12)
    pair = conjugate_streams(SHEAR, 2.2)
    assert laminar_flow_force(SHEAR, pair.s_plus) == pytest.approx(pair.ff_minus, abs=1e-11)


def test_bernoulli_matches_laminar_module():
    assert bernoulli(SHEAR, 0.7) == pytest.approx(0.245 + 1 + np.sqrt(0.49 + 2) - 0.7, abs=1e-12)


def test_domain_errors():
    for f in (lambda: sigma(IRROT, 0.0, 2.0), lambda: kappa(IRROT, -1.0, 2.0, 1.0),
              lambda: sigma_derivative(VorticityModel.constant(1.0), 1.0, 3.0),
              lambda: kappa_derivative(IRROT, 0.0, 1.0), lambda: laminar_flow_force(IRROT, 0.0)):
        with pytest.raises(DomainError):
            f()


def test_diagnostic_curve_consistency():
    s = np.linspace(0.5, 2.5, 9)
    c = diagnostic_curve(SHEAR, 2.2, s, 3.0)
    R = np.array([bernoulli(SHEAR, x) for x in s])
    assert np.allclose(c.kappa_values, 2 * (3.0 - c.sigma_values) - (2.2 - R) ** 2, atol=1e-14)
    assert np.allclose(c.kappa_derivative_values, 2 * s * (2.2 - R), atol=1e-14)
