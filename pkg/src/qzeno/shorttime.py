r"""Second-order decay rates of the excited state.

All rates are written as integrals over the scaled detuning
``eta = (omega - omega_eg) * tau``,

.. math::

    R = \int d\eta\; G(\eta/\tau + 1)\, \mathrm{sinc}^2(\eta/2)\, W(\eta),

with ``sinc(x) = sin(x)/x`` and a schedule-dependent filter ``W``: 1 for
projective measurements, the Poisson-kernel filter for imperfect
measurements, the Fejer kernel for phase-modulation pulses and the full
finite-``N`` pair sum for arbitrary schedules.
"""
from dataclasses import dataclass

import numpy as np

from . import _quad
from .errors import DomainError, ResourceError
from .measurement import MeasurementSchedule, filter_g, filter_h
from .spectra import eval_spectrum

TWO_PI = 2.0 * np.pi
# direct summation of the geometric pair sum below this distance from z = 1
_GEOM_FALLBACK = 1e-2
PAIRS_MAX_N = 10_000


def sinc2_half(eta):
    """``sinc(eta/2)**2`` with ``sinc(x) = sin(x)/x``."""
    x = 0.5 * np.asarray(eta, dtype=float)
    safe = np.where(x == 0, 1.0, x)
    return np.where(x == 0, 1.0, (np.sin(safe) / safe) ** 2)


def _far_sinc2(eta):
    return 2.0 / eta ** 2


# sinc^2(eta/2) = (2/eta^2) (1 - cos eta)
SINC2 = _quad.Kernel(near=sinc2_half,
                     far=((_far_sinc2, ((0.0, 1.0), (1.0, -0.5), (-1.0, -0.5))),))


def _spec_fn(spectrum):
    return lambda w: eval_spectrum(spectrum, w)


def _rate_integral(spectrum, tau, filt=_quad.UNIT_FILTER, rtol=1e-10):
    return filtered_rate(_spec_fn(spectrum), spectrum, tau, 1.0, filt, rtol)


def filtered_rate(spec_fn, spectrum, tau, shift, filt=_quad.UNIT_FILTER, rtol=1e-10):
    """``int d eta S(eta/tau + shift) sinc^2(eta/2) W(eta)`` for a weight
    ``spec_fn`` supported where ``spectrum`` is."""
    lo, hi = spectrum.support
    val = _quad.eta_integral(spec_fn, lo, hi, spectrum.features,
                             tau, shift, SINC2, filt, rtol=rtol)
    return max(float(val.real), 0.0)


def _comb_breakpoints(period, offset, per_period):
    """Panel edges every ``period/per_period``, aligned with ``offset``."""
    step = period / per_period

    def pts(a, b):
        k0 = np.ceil((a - offset) / step)
        k1 = np.floor((b - offset) / step)
        if k1 < k0:
            return np.array([])
        return offset + step * np.arange(k0, k1 + 1)

    return pts


def _check_tau(tau):
    if not (np.isfinite(tau) and tau > 0):
        raise DomainError("tau must be positive")


@dataclass(frozen=True)
class ShortTimeQuery:
    """Spectrum, schedule and number of measurement periods ``N``."""

    spectrum: object
    sched: MeasurementSchedule
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise DomainError("N must be a positive integer")
        object.__setattr__(self, "N", int(self.N))

    @classmethod
    def from_total_time(cls, spectrum, sched, t_F):
        n = t_F / sched.period
        if abs(n - round(n)) > 1e-9 * max(1.0, n) or round(n) < 1:
            raise DomainError("t_F must be a positive integer multiple of tau + tau_M")
        return cls(spectrum, sched, int(round(n)))

    @property
    def t_F(self):
        return self.N * self.sched.period


def pair_bracket(eta, sched, N, method="auto"):
    r"""Bracket ``N + 2 Re sum_{m} sum_{n<m} e^{i(n-m) eta'} prod c_l``.

    ``eta' = eta * (1 + tau_M/tau)``. ``method`` is ``"geometric"``
    (closed form, identical factors only), ``"recursive"`` (O(N) per
    point), ``"pairs"`` (explicit O(N^2) double sum) or ``"auto"``.
    """
    eta = np.asarray(eta, dtype=float)
    r = sched.tau_M / sched.tau
    if method == "auto":
        method = "geometric" if sched.identical else "recursive"
    if method == "geometric":
        if not sched.identical:
            raise DomainError("the geometric path needs identical factors")
        if sched.gamma == 0.0 or N == 1:
            return np.full(eta.shape, float(N))
        z = sched.gamma * np.exp(1j * (sched.theta - eta * (1.0 + r)))
        return N + 2.0 * _geometric_pair_sum(z, N).real
    u = np.exp(-1j * eta * (1.0 + r))
    c = sched.factor_array(N)
    if method == "recursive":
        acc = np.zeros(eta.shape, dtype=complex)
        total = np.zeros(eta.shape)
        for m in range(2, N + 1):
            acc = u * c[m - 1] * (acc + 1.0)
            total += acc.real
        return N + 2.0 * total
    if method == "pairs":
        if N > PAIRS_MAX_N:
            raise ResourceError(
                f"pair sum with N = {N} is O(N^2); use the geometric or recursive path")
        total = np.zeros(eta.shape)
        for m in range(2, N + 1):
            prod = np.ones(eta.shape, dtype=complex)
            for n in range(m - 1, 0, -1):
                prod = prod * c[n] * u
                total += prod.real
        return N + 2.0 * total
    raise DomainError(f"unknown method {method!r}")


def _geometric_pair_sum(z, N):
    """``sum_{d=1}^{N-1} (N - d) z**d`` elementwise."""
    one_minus = 1.0 - z
    near = np.abs(one_minus) < _GEOM_FALLBACK
    safe = np.where(near, 0.5, one_minus)
    zs = np.where(near, 0.5, z)
    out = (N * safe - zs * (1.0 - zs ** N)) / safe ** 2 - N
    if np.any(near):
        zn = z[near]
        d = np.arange(1, N)
        acc = np.zeros(zn.shape, dtype=complex)
        # Horner evaluation of sum (N - d) z^d
        for dd in d[::-1]:
            acc = (acc + (N - dd)) * zn
        out[near] = acc
    return out


def rate_general(q, method="auto", rtol=1e-10):
    """Finite-``N`` short-time rate for an arbitrary schedule.

    Keeps the exact inter-measurement phase ``eta * (1 + tau_M/tau)``.
    The overall weight is ``tau**2 / t_F`` as in the defining pair sum,
    so with ``tau_M > 0`` and no coherence between measurements it equals
    ``tau/(tau + tau_M)`` times :func:`rate_projective`.
    """
    sched, N = q.sched, q.N
    scale = sched.tau / q.t_F
    r = sched.tau_M / sched.tau
    if method == "pairs" and N > PAIRS_MAX_N:
        raise ResourceError(
            f"pair sum with N = {N} is O(N^2); use the geometric or recursive path")
    c = sched.factor_array(N)
    if N == 1 or not np.any(c[1:]):
        return scale * N * _rate_integral(q.spectrum, sched.tau, rtol=rtol)
    nu = 1.0 + r
    d1 = scale * c[1:].sum()
    lines = ((0.0, scale * N), (-nu, d1), (nu, np.conj(d1)))
    gmax = sched.gamma_max
    per = int(min(N, max(1, np.ceil(TWO_PI / max(1.0 - gmax, 1e-12)))))
    per = min(per, 4096)
    filt = _quad.Filter(
        near=lambda eta: scale * pair_bracket(eta, sched, N, method),
        lines=lines,
        breakpoints=_comb_breakpoints(TWO_PI / nu, 0.0, per) if per > 1 else None,
        noise=_phase_noise(N))
    return _rate_integral(q.spectrum, sched.tau, filt, rtol)


def _phase_noise(n):
    """Relative noise of a filter whose phase is ``n * eta`` with
    ``|eta|`` up to the directly integrated region."""
    return 4.0 * np.finfo(float).eps * n * (_quad.CORE + _quad.TAPER)


def rate_projective(spectrum, tau, rtol=1e-10):
    """Rate under ideal projective measurements every ``tau``."""
    _check_tau(tau)
    return _rate_integral(spectrum, tau, rtol=rtol)


def h_filter(gamma, theta):
    """``h(gamma, theta - eta)`` as an integration filter."""
    per = int(min(4096, max(1, np.ceil(1.0 / max(1.0 - gamma, 1e-12)))))
    c = gamma * np.exp(1j * theta)
    return _quad.Filter(
        near=lambda eta: filter_h(gamma, theta - eta),
        lines=((0.0, 1.0), (-1.0, c), (1.0, np.conj(c))),
        breakpoints=_comb_breakpoints(TWO_PI, theta, per) if per > 1 else None)


def g_filter(theta, N):
    """Pulse filter ``g(theta - eta)`` for ``N`` pulses."""
    c = (1.0 - 1.0 / N) * np.exp(1j * theta)
    return _quad.Filter(
        near=lambda eta: filter_g(theta - eta, N),
        lines=((0.0, 1.0), (-1.0, c), (1.0, np.conj(c))),
        breakpoints=_comb_breakpoints(TWO_PI, theta, N),
        noise=_phase_noise(N))


def rate_measured(spectrum, tau, gamma, theta=0.0, rtol=1e-10):
    """``N``-independent rate for identical imperfect measurements."""
    _check_tau(tau)
    if not 0.0 <= gamma <= 1.0:
        raise DomainError("gamma must lie in [0, 1)")
    filter_h(gamma, 0.0)  # raises SingularFilterError at gamma = 1
    if gamma == 0.0:
        return rate_projective(spectrum, tau, rtol)
    return _rate_integral(spectrum, tau, h_filter(gamma, theta % TWO_PI), rtol)


def rate_pmp(spectrum, tau, theta, N, rtol=1e-8):
    """Rate under ``N`` phase-modulation pulses of phase ``theta``."""
    _check_tau(tau)
    if int(N) != N or N < 2:
        raise DomainError("rate_pmp needs N >= 2")
    N = int(N)
    return _rate_integral(spectrum, tau, g_filter(theta % TWO_PI, N), rtol)


def rate_pmp_comb(spectrum, tau, theta):
    """Pulse rate in the long-train limit (two surviving comb teeth)."""
    _check_tau(tau)
    if not 0.0 <= theta <= TWO_PI:
        raise DomainError("theta must lie in [0, 2 pi]")
    w1 = theta / tau + 1.0
    w2 = (theta - TWO_PI) / tau + 1.0
    s1 = float(sinc2_half(theta))
    s2 = float(sinc2_half(theta - TWO_PI))
    return TWO_PI * (eval_spectrum(spectrum, w1) * s1 + eval_spectrum(spectrum, w2) * s2)


def golden_rule(spectrum):
    """Natural decay rate ``2 pi G(omega_eg)``."""
    return TWO_PI * eval_spectrum(spectrum, 1.0)


def zeno_bound(spectrum, tau, gamma_max, rtol=1e-10):
    """Upper bound on :func:`rate_general` for factor moduli ``<= gamma_max``."""
    if not 0.0 <= gamma_max < 1.0:
        raise DomainError("gamma_max must lie in [0, 1)")
    return (1.0 + gamma_max) / (1.0 - gamma_max) * rate_projective(spectrum, tau, rtol)
