import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qzeno import DomainError, DegenerateSpectrumError, SpectralDensity
from qzeno.oracle import simpson_grid
from qzeno.spectra import eval_spectrum, spectrum_integral, support_width


def test_hydrogenic_vanishes_at_origin(hydrogenic):
    assert eval_spectrum(hydrogenic, 0.0) == 0.0


def test_ohmic_at_cutoff(ohmic):
    assert eval_spectrum(ohmic, 500.0) == pytest.approx(500.0 / math.e, rel=1e-15)


def test_hydrogenic_at_unit_frequency_extended_precision(hydrogenic):
    mp.mp.dps = 40
    ref = 1 / (1 + (mp.mpf(1) / mp.mpf("549.5")) ** 2) ** 4
    assert eval_spectrum(hydrogenic, 1.0) == pytest.approx(float(ref), rel=1e-15)
    assert eval_spectrum(hydrogenic, 1.0) == pytest.approx(0.9999868, abs=1e-7)


def test_negative_frequencies_give_zero(hydrogenic, ohmic):
    w = -np.linspace(1e-6, 1e4, 50)
    assert np.all(eval_spectrum(hydrogenic, w) == 0)
    assert np.all(eval_spectrum(ohmic, w) == 0)


def test_non_finite_frequency_rejected(ohmic):
    with pytest.raises(DomainError):
        eval_spectrum(ohmic, float("nan"))


@pytest.mark.parametrize("kind,ref", [("ohmic", 500.0 ** 2), ("hydrogenic", 549.5 ** 2 / 6)])
def test_closed_form_integrals(kind, ref):
    s = SpectralDensity.ohmic(500.0) if kind == "ohmic" else SpectralDensity.hydrogenic(549.5)
    assert spectrum_integral(s) == pytest.approx(ref, rel=1e-8)


def test_integral_matches_simpson_oracle(hydrogenic):
    lo, hi = hydrogenic.support
    ref = simpson_grid(lambda w: eval_spectrum(hydrogenic, w), lo, hi, 100_000)
    assert spectrum_integral(hydrogenic) == pytest.approx(ref, rel=1e-6)


def test_zero_table_integral_and_degenerate_width():
    s = SpectralDensity.tabulated([0.0, 1.0, 2.0], [0.0, 0.0, 0.0])
    assert spectrum_integral(s) == 0.0
    with pytest.raises(DegenerateSpectrumError):
        support_width(s, 0.5)


def test_support_complement_is_negligible(hydrogenic, ohmic):
    for s in (hydrogenic, ohmic):
        lo, hi = s.support
        tail = simpson_grid(lambda w: eval_spectrum(s, w), hi, 50 * hi, 200_000)
        assert tail < 1e-9 * spectrum_integral(s)


def test_ohmic_half_width_brackets_cutoff(ohmic):
    lo, hi = support_width(ohmic, 0.5)
    assert lo < 500.0 < hi
    target = 0.5 * 500.0 / math.e
    assert eval_spectrum(ohmic, lo) == pytest.approx(target, rel=1e-9)
    assert eval_spectrum(ohmic, hi) == pytest.approx(target, rel=1e-9)


def test_hydrogenic_peak_location(hydrogenic):
    w, _ = hydrogenic.peak
    assert w == pytest.approx(549.5 / math.sqrt(7.0))
    lo, hi = support_width(hydrogenic, 0.99)
    assert lo < w < hi


def test_narrow_table_width_is_its_bin():
    s = SpectralDensity.tabulated([0.0, 1.0, 1.1, 2.0], [0.0, 5.0, 5.0, 0.0])
    lo, hi = support_width(s, 0.999)
    assert 0.99 < lo <= 1.0 and 1.1 <= hi < 1.11


def test_table_validation():
    with pytest.raises(DomainError):
        SpectralDensity.tabulated([0.0, 0.0], [1.0, 1.0])
    with pytest.raises(DomainError):
        SpectralDensity.tabulated([0.0, 1.0], [1.0, -1.0])


def test_table_outside_grid_is_zero():
    s = SpectralDensity.tabulated([1.0, 2.0], [3.0, 3.0])
    assert eval_spectrum(s, 0.5) == 0.0 and eval_spectrum(s, 2.5) == 0.0
    assert eval_spectrum(s, 1.5) == 3.0


def test_csv_loader(tmp_path):
    p = tmp_path / "g.csv"
    p.write_text("omega,G\n0,0\n1,2\n2,0\n")
    s = SpectralDensity.from_csv(p)
    assert spectrum_integral(s) == pytest.approx(2.0)


def test_scale_multiplies_values_not_support():
    a = SpectralDensity.ohmic(500.0)
    b = SpectralDensity.ohmic(500.0, scale=1e-3)
    assert a.support == b.support
    assert eval_spectrum(b, 3.0) == pytest.approx(1e-3 * eval_spectrum(a, 3.0))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1e3), min_size=2, max_size=30, unique=True),
       st.floats(-2e3, 2e3))
def test_tabulated_interpolation_nonnegative(values, w):
    omega = np.sort(np.array(values))
    g = np.abs(np.sin(omega))
    s = SpectralDensity.tabulated(omega, g)
    assert eval_spectrum(s, w) >= 0.0


def test_random_frequencies_nonnegative(hydrogenic, ohmic, rng):
    for s in (hydrogenic, ohmic):
        hi = s.support[1]
        w = rng.uniform(-2 * hi, 2 * hi, 10_000)
        assert np.all(eval_spectrum(s, w) >= 0)
