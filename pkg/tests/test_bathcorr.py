import math

import numpy as np
import pytest
from scipy import integrate

from qzeno import BathState, DomainError, MeasurementSchedule, SpectralDensity
from qzeno.bathcorr import (bath_corr, coincidence, corr_integral, corr_integral2,
                            corr_integral3, correlation_time, effective_corr,
                            tabulate_bath_corr, tau_A, tau_B)
from qzeno.spectra import spectrum_integral

from conftest import ohmic_corr


def _time_quad(f, u, n_split=60):
    """Reference integral of a complex function over [0, u], split
    geometrically to resolve the bath time scale."""
    pts = np.unique(np.r_[0.0, np.geomspace(1e-7, u, n_split)])
    total = 0.0 + 0.0j
    for a, b in zip(pts[:-1], pts[1:]):
        total += integrate.quad(lambda t: f(t).real, a, b, epsrel=1e-13, limit=200)[0]
        total += 1j * integrate.quad(lambda t: f(t).imag, a, b, epsrel=1e-13, limit=200)[0]
    return total


def _freq_quad(weight, phase_sign, shift, t, hi, n_panels=400):
    """``int weight(w) exp(phase_sign * i (w + shift) t) dw`` by panelwise
    QAWO quadrature (independent of the package's eta engine)."""
    edges = np.linspace(0.0, hi, n_panels + 1)
    re = im = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        re += integrate.quad(weight, a, b, weight="cos", wvar=t, epsrel=1e-12, limit=200)[0]
        im += integrate.quad(weight, a, b, weight="sin", wvar=t, epsrel=1e-12, limit=200)[0]
    return np.exp(phase_sign * 1j * shift * t) * (re + phase_sign * 1j * im)


def test_coincidence_zero_temperature(ohmic_bath, ohmic):
    assert bath_corr(ohmic_bath, 0.0) == pytest.approx(250000.0, rel=1e-9)
    assert coincidence(ohmic_bath, "minus") == pytest.approx(spectrum_integral(ohmic), rel=1e-9)


@pytest.mark.parametrize("t", [1e-5, 1e-3, 0.02, 0.7, 30.0])
def test_ohmic_closed_form(ohmic_bath, t):
    # once |g(t)| has decayed the error is limited by cancellation in an
    # integrand whose absolute integral is g(0): use a floor of 1e-11 g(0)
    floor = 1e-11 * 250000.0
    plus = bath_corr(ohmic_bath, t, "plus")
    assert plus == pytest.approx(complex(ohmic_corr(t)), rel=1e-10, abs=floor)
    # T = 0 minus branch keeps only the counter-rotating term
    minus_ref = np.exp(-1j * t) * 500.0 ** 2 / (1 + 1j * 500.0 * t) ** 2
    assert bath_corr(ohmic_bath, t, "minus") == pytest.approx(minus_ref, rel=1e-10, abs=floor)


def test_hermitian_symmetry(ohmic_bath):
    for t in (1e-3, 0.3, 4.0):
        assert bath_corr(ohmic_bath, -t) == pytest.approx(np.conj(bath_corr(ohmic_bath, t)))


def test_finite_temperature_against_qawo(ohmic):
    b = BathState(ohmic, T=1.0)
    t = 0.05
    hi = ohmic.support[1]
    np1 = b.weighted(1.0)
    n0 = b.weighted(0.0)
    ref = (_freq_quad(np1, -1, -1.0, t, hi) + _freq_quad(n0, +1, 1.0, t, hi))
    assert bath_corr(b, t, "plus") == pytest.approx(ref, rel=1e-8)
    ref_m = (_freq_quad(n0, +1, -1.0, t, hi) + _freq_quad(np1, -1, 1.0, t, hi))
    assert bath_corr(b, t, "minus") == pytest.approx(ref_m, rel=1e-8)


def test_thermal_balance_of_coincidences(ohmic):
    b = BathState(ohmic, T=2.0)
    hi = ohmic.support[1]
    # the (n+1) pieces minus the n pieces give the bare spectral weight
    np1 = integrate.quad(b.weighted(1.0), 0, hi, limit=400, epsrel=1e-12)[0]
    n0 = integrate.quad(b.weighted(0.0), 0, hi, limit=400, epsrel=1e-12)[0]
    assert np1 - n0 == pytest.approx(spectrum_integral(ohmic), rel=1e-6)
    # both branches share the same coincidence value int G (2n + 1)
    assert coincidence(b, "plus") == pytest.approx(coincidence(b, "minus"), rel=1e-10)
    assert coincidence(b, "plus") == pytest.approx(np1 + n0, rel=1e-8)


@pytest.mark.parametrize("u", [1e-4, 0.01, 0.5])
def test_time_integrals(ohmic_bath, u):
    assert corr_integral(ohmic_bath, u) == pytest.approx(_time_quad(ohmic_corr, u), rel=1e-9)
    assert corr_integral2(ohmic_bath, u) == pytest.approx(
        _time_quad(lambda t: (u - t) * ohmic_corr(t), u), rel=1e-9)
    assert corr_integral3(ohmic_bath, u) == pytest.approx(
        _time_quad(lambda t: 0.5 * (u - t) ** 2 * ohmic_corr(t), u), rel=1e-9)


def test_time_integrals_reject_negative(ohmic_bath):
    with pytest.raises(DomainError):
        corr_integral(ohmic_bath, -1.0)


def test_effective_corr_examples(ohmic_bath):
    s = MeasurementSchedule(0.1, gamma=1.0, theta=0.0)
    val = effective_corr(ohmic_bath, s, 0.25, 0.22)
    assert val == pytest.approx(2 * bath_corr(ohmic_bath, 0.03).real)
    sm = MeasurementSchedule(0.1, tau_M=0.05, gamma=0.5)
    assert effective_corr(ohmic_bath, sm, 0.16, 0.0) == 0.0


def test_fig5_tail_suppression(ohmic_bath):
    slow = MeasurementSchedule(0.1, gamma=0.5)
    fast = MeasurementSchedule(0.003, gamma=0.5)
    a = abs(effective_corr(ohmic_bath, fast, 0.2, 0.0))
    b = abs(effective_corr(ohmic_bath, slow, 0.2, 0.0))
    assert a < b


def test_translation_covariance(ohmic_bath, rng):
    s = MeasurementSchedule(0.1, 0.02, 0.6, 1.1)
    p = s.period
    for _ in range(20):
        t, u = np.sort(rng.uniform(0, 1.0, 2))[::-1]
        for branch in ("plus", "minus"):
            f0 = effective_corr(ohmic_bath, s, t, u, branch)
            f1 = effective_corr(ohmic_bath, s, t + p, u + p, branch)
            assert abs(f0 - f1) <= 1e-9 * max(1.0, abs(f0))
            assert abs(f0) <= 2 * abs(bath_corr(ohmic_bath, t - u, branch)) * (1 + 1e-12)


def test_monotone_in_gamma(ohmic_bath):
    t, s = 0.95, 0.02
    vals = [abs(effective_corr(ohmic_bath, MeasurementSchedule(0.1, gamma=g), t, s))
            for g in (0.2, 0.5, 0.9)]
    assert vals[0] <= vals[1] <= vals[2]


def test_tau_A_examples():
    assert tau_A(MeasurementSchedule(0.01)) == pytest.approx(0.01)
    assert tau_A(MeasurementSchedule(0.01, 0.002, gamma=math.exp(-1))) == pytest.approx(0.024)
    assert tau_A(MeasurementSchedule(0.01, gamma=1.0)) == math.inf


def test_tau_B_ohmic(ohmic_bath):
    tb = tau_B(ohmic_bath)
    # |g| / |g(0)| = 1/(1 + (omega_c t)^2) crosses 5% at sqrt(19)/omega_c
    assert tb == pytest.approx(math.sqrt(19.0) / 500.0, rel=1e-4)
    assert correlation_time(ohmic_bath, MeasurementSchedule(0.1)) == pytest.approx(tb)


def test_tau_B_non_decaying_warns(caplog):
    narrow = SpectralDensity.tabulated([1.0, 1.0 + 1e-7], [1.0, 1.0])
    assert tau_B(BathState(narrow), kmax=4) == math.inf


def test_tabulated_kernel_interpolation(ohmic_bath, rng):
    grid = np.linspace(0.0, 0.01, 2001)
    k = tabulate_bath_corr(ohmic_bath, grid)
    for t in rng.uniform(0, 0.01, 20):
        direct = bath_corr(ohmic_bath, t)
        assert abs(k(t) - direct) <= 1e-7 * abs(direct)


def test_negative_temperature_rejected(ohmic):
    with pytest.raises(DomainError):
        BathState(ohmic, T=-1.0)
