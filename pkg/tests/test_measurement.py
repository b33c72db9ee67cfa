import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from qzeno import (ApparatusModel, DomainError, MeasurementSchedule, SingularFilterError,
                   apparatus_correlation, decoherence_factor, filter_g, filter_h,
                   interval_index)
from qzeno.measurement import apparatus_correlation_array, free_index
from qzeno.oracle import random_hermitian


@pytest.mark.parametrize("x", [0.0, 1.0, math.pi, 17.0])
def test_h_is_one_without_decoherence(x):
    assert filter_h(0.0, x) == 1.0


def test_h_examples():
    assert filter_h(0.5, 0.0) == pytest.approx(3.0)
    assert filter_h(0.8, math.pi) == pytest.approx(1.0 / 9.0)


def test_h_singular_at_unit_gamma():
    with pytest.raises(SingularFilterError, match="filter_g"):
        filter_h(1.0, 0.3)


@pytest.mark.parametrize("gamma", [0.0, 0.3, 0.8, 0.99])
def test_h_normalized_and_peaked(gamma):
    val, _ = integrate.quad(lambda x: filter_h(gamma, x), -math.pi, math.pi,
                            points=[0.0], limit=400, epsrel=1e-12)
    assert val == pytest.approx(2 * math.pi, rel=1e-6)
    x = np.linspace(-3 * math.pi, 3 * math.pi, 60001)
    h = filter_h(gamma, x)
    assert np.all(h > 0)
    if gamma > 0:
        peak = x[np.argmax(h)]
        assert min(abs(peak - 2 * math.pi * k) for k in (-1, 0, 1)) < 1e-9
        assert h.max() == pytest.approx((1 + gamma) / (1 - gamma))


def test_g_examples():
    assert filter_g(0.0, 7) == 7.0
    assert filter_g(math.pi, 2) == pytest.approx(0.0, abs=1e-30)
    for n in (2, 5, 40):
        assert filter_g(2 * math.pi / n, n) == pytest.approx(0.0, abs=1e-25)


def test_g_period_mean_is_one():
    N = 200
    edges = np.linspace(-math.pi, math.pi, 2 * N + 1)
    total = sum(integrate.quad(lambda x: filter_g(x, N), a, b)[0]
                for a, b in zip(edges[:-1], edges[1:]))
    assert total / (2 * math.pi) == pytest.approx(1.0, abs=1e-3)


def test_interval_examples():
    s = MeasurementSchedule(tau=1.0, tau_M=0.2)
    assert interval_index(0.0, s) == (True, 1)
    assert interval_index(0.2 + 0.5, s) == (False, 1)
    assert interval_index(1.2, s) == (True, 2)
    s0 = MeasurementSchedule(tau=1.0)
    assert interval_index(1.5, s0) == (False, 2)
    assert interval_index(1.0, s0) == (False, 2)
    with pytest.raises(DomainError):
        interval_index(-1e-3, s0)


def test_correlation_examples():
    s = MeasurementSchedule(tau=1.0, gamma=0.5)
    assert apparatus_correlation(0.7, 0.2, s) == 1.0
    assert apparatus_correlation(2.5, 0.5, s) == pytest.approx(0.25)
    sm = MeasurementSchedule(tau=1.0, tau_M=0.3, gamma=0.5)
    assert apparatus_correlation(1.4, 0.5, sm) == 0.0
    with pytest.raises(DomainError):
        apparatus_correlation(0.1, 0.2, s)


def test_correlation_sequence_product():
    s = MeasurementSchedule(tau=1.0, factors=[(0.5, 0.0), (0.4, math.pi / 2), (0.9, 1.0)])
    # free intervals 1 and 4: factors 2, 3 and the repeated last one
    expected = (0.4j) * (0.9 * np.exp(1j)) * (0.9 * np.exp(1j))
    assert apparatus_correlation(3.5, 0.5, s) == pytest.approx(expected)
    arr = apparatus_correlation_array(np.array([3.5]), np.array([0.5]), s)
    assert arr[0] == pytest.approx(expected)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 2.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0),
       st.floats(0, 2 * math.pi), st.floats(0, 20), st.floats(0, 20))
def test_correlation_modulus_bounded(tau, tau_M, gamma, theta, a, b):
    s = MeasurementSchedule(tau, tau_M, gamma, theta)
    t, u = max(a, b), min(a, b)
    g = apparatus_correlation(t, u, s)
    assert abs(g) <= 1.0 + 1e-12
    if gamma == 1.0 and g != 0:
        assert abs(g) == pytest.approx(1.0)
    assert apparatus_correlation_array(np.array(t), np.array(u), s) == pytest.approx(g)


def test_free_index_marks_measurements():
    s = MeasurementSchedule(tau=1.0, tau_M=0.5)
    assert list(free_index(np.array([0.1, 0.6, 1.6, 2.0]), s)) == [0, 1, 0, 2]


def test_theta_stored_in_unit_circle_range():
    assert MeasurementSchedule(1.0, theta=-math.pi / 2).theta == pytest.approx(1.5 * math.pi)


def test_decoherence_examples(rng):
    h = random_hermitian(3, rng)
    psi = np.array([1, 0, 0], dtype=complex)
    app = ApparatusModel(h, h, psi)
    assert decoherence_factor(app, 0.7) == pytest.approx((1.0, 0.0))
    app2 = ApparatusModel(h, random_hermitian(3, rng), psi)
    assert decoherence_factor(app2, 0.0) == pytest.approx((1.0, 0.0))
    omega = 1.3
    flip = np.array([[0, 1], [1, 0]], dtype=complex)
    app3 = ApparatusModel(np.zeros((2, 2)), 0.5 * omega * flip, np.array([1, 0], dtype=complex))
    for tm in (0.1, 1.0, 2.7):
        assert decoherence_factor(app3, tm)[0] == pytest.approx(abs(math.cos(omega * tm / 2)))


def test_decoherence_modulus_never_exceeds_one(rng):
    for _ in range(1000):
        d = int(rng.integers(1, 5))
        psi = rng.normal(size=d) + 1j * rng.normal(size=d)
        app = ApparatusModel(random_hermitian(d, rng), random_hermitian(d, rng),
                             psi / np.linalg.norm(psi))
        gamma, theta = decoherence_factor(app, float(rng.uniform(0, 5)))
        assert gamma <= 1.0 + 1e-12 and 0.0 <= theta < 2 * math.pi


def test_apparatus_validation():
    with pytest.raises(DomainError):
        ApparatusModel(np.array([[0, 1], [0, 0]]), np.eye(2), np.array([1, 0]))
    with pytest.raises(DomainError):
        ApparatusModel(np.eye(2), np.eye(2), np.array([1, 1]))
