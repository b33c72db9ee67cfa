r"""Bath correlation functions, their time integrals and the dressed kernels.

With occupation ``n(omega)``, the two bath correlations are

.. math::

    g_B^{+}(t) = \int G\,[(n+1) e^{-i(\omega-1)t} + n\, e^{i(\omega+1)t}]\,d\omega,
    \qquad
    g_B^{-}(t) = \int G\,[n\, e^{i(\omega-1)t} + (n+1) e^{-i(\omega+1)t}]\,d\omega .

Each is a sum of two terms ``int S(omega) exp(i sigma (omega - shift) t)``.
Their first and second time integrals from zero have closed-form kernels in
the scaled frequency ``eta = (omega - shift) t`` and are evaluated with the
same quadrature engine as the decay rates. The solvers in :mod:`rateq` use
these antiderivatives as exact moments of the memory kernel.
"""
from dataclasses import dataclass, field
from functools import cached_property
import logging
import math

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from . import _quad
from .errors import DomainError
from .measurement import apparatus_correlation_array
from .spectra import eval_spectrum

log = logging.getLogger(__name__)

BRANCHES = ("plus", "minus")


@dataclass(frozen=True, eq=False)
class BathState:
    """Spectral density at temperature ``T`` (units of ``omega_eg``)."""

    spectrum: object
    T: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.T) and self.T >= 0):
            raise DomainError("temperature must be finite and nonnegative")
        object.__setattr__(self, "T", float(self.T))

    @property
    def beta(self):
        return math.inf if self.T == 0 else 1.0 / self.T

    def occupation(self, omega):
        """Bose occupation ``1/(exp(omega/T) - 1)``; zero at ``T = 0``."""
        w = np.asarray(omega, dtype=float)
        if self.T == 0:
            out = np.zeros_like(w)
        else:
            with np.errstate(divide="ignore", over="ignore"):
                out = np.where(w > 0, 1.0 / np.expm1(w / self.T), 0.0)
        return float(out) if out.ndim == 0 else out

    def weighted(self, extra):
        """``G(omega) * (n(omega) + extra)`` as a vectorized function.

        At ``omega -> 0`` the product ``G n`` is finite whenever ``G``
        vanishes linearly; it is evaluated as ``G/omega * omega n``.
        """
        spec, T = self.spectrum, self.T

        def f(w):
            w = np.asarray(w, dtype=float)
            g = eval_spectrum(spec, w)
            if T == 0:
                return g * extra
            x = np.where(w > 0, w / T, 1.0)
            with np.errstate(over="ignore"):
                # x / expm1(x) stays finite as x -> 0
                xn = np.where(w > 0, x / np.expm1(x), 1.0)
            gn = np.where(w > 0, g / np.where(w > 0, w, 1.0) * T * xn, 0.0)
            return gn + extra * g

        return f

    def describe(self):
        return {"spectrum": self.spectrum.describe(), "T": self.T}


# (weight extra, shift, sigma) for the two terms of each branch
_TERMS = {
    "plus": ((1.0, 1.0, -1.0), (0.0, -1.0, 1.0)),
    "minus": ((0.0, 1.0, 1.0), (1.0, -1.0, -1.0)),
}


def _terms(b, branch):
    if branch not in _TERMS:
        raise DomainError(f"branch must be one of {BRANCHES}")
    out = []
    for extra, shift, sigma in _TERMS[branch]:
        if extra == 0.0 and b.T == 0:
            continue
        out.append((b.weighted(extra), shift, sigma))
    return out


def _exp_kernel(sigma):
    return _quad.Kernel(near=lambda eta: np.exp(1j * sigma * eta),
                        far=((lambda eta: np.ones_like(eta), ((sigma, 1.0),)),))


def _int1_kernel(sigma):
    def near(eta):
        x = 0.5 * eta
        safe = np.where(x == 0, 1.0, x)
        return np.exp(1j * sigma * x) * np.where(x == 0, 1.0, np.sin(safe) / safe)

    amp = lambda eta: 1.0 / (1j * sigma * eta)
    return _quad.Kernel(near=near, far=((amp, ((sigma, 1.0), (0.0, -1.0))),))


def _int2_kernel(sigma):
    # (e^{i sigma y} - 1 - i sigma y) / (i sigma y)^2
    #   = (1 - cos y)/y^2 + i sigma (y - sin y)/y^2
    def near(eta):
        y = np.asarray(eta, dtype=float)
        small = np.abs(y) < 0.5
        ys = np.where(small, 1.0, y)
        h = 0.5 * y
        hs = np.where(h == 0, 1.0, h)
        re = 0.5 * np.where(h == 0, 1.0, (np.sin(hs) / hs) ** 2)
        y2 = y * y
        series = y * (1 / 6 - y2 * (1 / 120 - y2 * (1 / 5040 - y2 * (
            1 / 362880 - y2 * (1 / 39916800 - y2 / 6227020800)))))
        im = np.where(small, series, (ys - np.sin(ys)) / ys ** 2)
        return re + 1j * sigma * im

    a2 = lambda eta: 1.0 / (1j * sigma * eta) ** 2
    a1 = lambda eta: -1.0 / (1j * sigma * eta)
    return _quad.Kernel(near=near, far=((a2, ((sigma, 1.0), (0.0, -1.0))),
                                        (a1, ((0.0, 1.0),))))


def _int3_kernel(sigma):
    # (e^x - 1 - x - x^2/2) / x^3 with x = i sigma y
    #   = (y - sin y)/y^3 + i sigma (cos y - 1 + y^2/2)/y^3
    def near(eta):
        y = np.asarray(eta, dtype=float)
        small = np.abs(y) < 1.0
        ys = np.where(small, 1.0, y)
        y2 = y * y
        re_s = np.zeros_like(y)
        im_s = np.zeros_like(y)
        term_r, term_i = np.ones_like(y), y.copy()
        for k in range(10):
            re_s += term_r / math.factorial(2 * k + 3)
            im_s += term_i / math.factorial(2 * k + 4)
            term_r = -term_r * y2
            term_i = -term_i * y2
        re = np.where(small, re_s, (ys - np.sin(ys)) / ys ** 3)
        im = np.where(small, im_s, (np.cos(ys) - 1.0 + 0.5 * ys ** 2) / ys ** 3)
        return re + 1j * sigma * im

    a3 = lambda eta: 1.0 / (1j * sigma * eta) ** 3
    a2 = lambda eta: -1.0 / (1j * sigma * eta) ** 2
    a1 = lambda eta: -0.5 / (1j * sigma * eta)
    return _quad.Kernel(near=near, far=((a3, ((sigma, 1.0), (0.0, -1.0))),
                                        (a2, ((0.0, 1.0),)), (a1, ((0.0, 1.0),))))


def _support(b):
    lo, hi = b.spectrum.support
    return lo, hi, b.spectrum.features


def _plain_integral(f, b, rtol):
    lo, hi, feats = _support(b)
    edges = np.unique(np.concatenate([[lo, hi], feats[(feats > lo) & (feats < hi)]]))
    val, err = _quad.gk_integrate(lambda w: f(w), edges, rtol=rtol)
    return float(np.real(val))


def _scaled(b, branch, u, kernel_for, rtol):
    lo, hi, feats = _support(b)
    total = 0.0 + 0.0j
    for f, shift, sigma in _terms(b, branch):
        total += _quad.eta_integral(f, lo, hi, feats, u, shift, kernel_for(sigma),
                                    rtol=rtol)
    return total


def coincidence(b, branch="plus", rtol=1e-10):
    """``g_B(0) = int G (2n + 1) d omega`` (same for both branches)."""
    total = 0.0
    for f, _, _ in _terms(b, branch):
        total += _plain_integral(f, b, rtol)
    return total


def bath_corr(b, dt, branch="plus", rtol=1e-10):
    """Bath correlation ``g_B^{branch}(dt)``; negative ``dt`` gives the
    complex conjugate."""
    if not np.isfinite(dt):
        raise DomainError("time difference must be finite")
    if dt == 0:
        return complex(coincidence(b, branch, rtol))
    u = abs(dt)
    val = _scaled(b, branch, u, _exp_kernel, rtol) / u
    return val if dt > 0 else np.conj(val)


def corr_integral(b, u, branch="plus", rtol=1e-10):
    """``int_0^u g_B(t) dt`` for ``u >= 0``."""
    if u < 0:
        raise DomainError("u must be nonnegative")
    if u == 0:
        return 0.0 + 0.0j
    return _scaled(b, branch, u, _int1_kernel, rtol)


def corr_integral2(b, u, branch="plus", rtol=1e-10):
    """``int_0^u int_0^t g_B(t') dt' dt`` for ``u >= 0``."""
    if u < 0:
        raise DomainError("u must be nonnegative")
    if u == 0:
        return 0.0 + 0.0j
    return u * _scaled(b, branch, u, _int2_kernel, rtol)


def corr_integral3(b, u, branch="plus", rtol=1e-10):
    """Third repeated time integral of ``g_B`` from zero to ``u >= 0``."""
    if u < 0:
        raise DomainError("u must be nonnegative")
    if u == 0:
        return 0.0 + 0.0j
    return u * u * _scaled(b, branch, u, _int3_kernel, rtol)


@dataclass(frozen=True, eq=False)
class ComplexKernel:
    """Sampled complex two-time function on a strictly increasing grid."""

    grid: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if g.ndim != 1 or g.shape != v.shape:
            raise DomainError("grid and values must be 1-D of equal length")
        if np.any(np.diff(g) <= 0):
            raise DomainError("kernel grid must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise DomainError("kernel values must be finite")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    @cached_property
    def _splines(self):
        return CubicSpline(self.grid, self.values.real), CubicSpline(self.grid, self.values.imag)

    def __call__(self, t):
        """Cubic interpolation between grid points."""
        re, im = self._splines
        return re(t) + 1j * im(t)


def tabulate_bath_corr(b, grid, branch="plus", rtol=1e-10):
    values = [bath_corr(b, float(t), branch, rtol) for t in grid]
    return ComplexKernel(np.asarray(grid, dtype=float), np.array(values),
                         {"kernel": f"g_B^{branch}", "T": b.T})


def effective_corr(b, sched, t, s, branch="plus", rtol=1e-10):
    """Dressed kernel ``F(t, s) = 2 Re[g_B(t - s) g_A(t, s)]``."""
    if not 0 <= s <= t:
        raise DomainError("effective_corr needs 0 <= s <= t")
    ga = complex(apparatus_correlation_array(np.array(t), np.array(s), sched))
    if ga == 0:
        return 0.0
    return 2.0 * (bath_corr(b, t - s, branch, rtol) * ga).real


def effective_corr_series(b, sched, times, s=0.0, branch="plus", rtol=1e-10):
    """``(t, F(t, s), g_B(t - s))`` sampled at ``times``."""
    times = np.asarray(times, dtype=float)
    ga = apparatus_correlation_array(times, np.full(times.shape, s), sched)
    gb = np.array([bath_corr(b, t - s, branch, rtol) for t in times])
    return times, 2.0 * (gb * ga).real, gb


def tau_A(sched):
    """Order-of-magnitude memory time set by the apparatus."""
    gamma = sched.gamma_max
    p = sched.period
    if gamma == 0.0:
        return p
    if gamma >= 1.0:
        return math.inf
    return (1.0 - 1.0 / math.log(gamma)) * p


def tau_B(b, level=0.05, kmin=-40, kmax=12, rtol=1e-8):
    """First time ``|g_B^+(t)|`` drops below ``level * |g_B^+(0)|`` and
    stays below on the dyadic grid ``2**k``, ``k <= kmax``."""
    g0 = abs(coincidence(b, "plus", rtol))
    if g0 == 0:
        return 0.0
    ks = np.arange(kmin, kmax + 1)
    below = np.array([abs(bath_corr(b, 2.0 ** int(k), "plus", rtol)) < level * g0 for k in ks])
    # last probe that is still above the level
    above = np.nonzero(~below)[0]
    if above.size == 0:
        return 2.0 ** kmin
    last = above[-1]
    if last == ks.size - 1:
        log.warning("bath correlation does not decay on the probe grid; tau_B = inf")
        return math.inf
    lo, hi = 2.0 ** int(ks[last]), 2.0 ** int(ks[last + 1])
    f = lambda t: abs(bath_corr(b, t, "plus", rtol)) - level * g0
    # first crossing inside the bracket, searched on a fine sub-grid
    sub = np.geomspace(lo, hi, 33)
    vals = np.array([f(t) for t in sub])
    idx = np.nonzero(vals < 0)[0]
    j = idx[0]
    return brentq(f, sub[j - 1], sub[j], xtol=1e-6 * sub[j])


def correlation_time(b, sched):
    """Effective memory time ``min(tau_A, tau_B)``."""
    return min(tau_A(sched), tau_B(b))
