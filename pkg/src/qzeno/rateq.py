r"""Population dynamics of the measured two-level system.

The excited-state population obeys the memory equation

.. math::

    \dot P_e(t) = -\int_0^t F^+(t,s) P_e(s)\,ds + \int_0^t F^-(t,s) P_g(s)\,ds,
    \qquad F^\pm(t,s) = 2\,\mathrm{Re}[g_B^\pm(t-s)\, g_A(t,s)].

:func:`solve_volterra` integrates it by product integration. The history
``P(s)`` is interpolated linearly between grid points while the kernel is
integrated exactly over every (step, cell) pair through the second and
third time integrals of ``g_B`` (see :mod:`qzeno.bathcorr`); the step
therefore has to resolve ``P`` but not the bath correlation time.
"""
from dataclasses import dataclass, field
import logging
import math

import numpy as np

from . import bathcorr
from .errors import (ConfigurationError, DomainError, NumericalError, ResourceError,
                     SingularFilterError)
from .measurement import free_index
from .shorttime import filtered_rate, g_filter, h_filter

log = logging.getLogger(__name__)

SCHEMES = ("volterra", "timelocal", "markov")
MAX_STEPS = 200_000
# |g_A| below which older history is dropped
_GA_CUTOFF = 1e-16


@dataclass(frozen=True)
class RatePair:
    """Decay rates out of the excited (``R_e``) and ground (``R_g``) state."""

    R_e: float
    R_g: float

    def __post_init__(self):
        for name in ("R_e", "R_g"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise NumericalError(f"{name} is not finite")
            if v < 0:
                if v < -1e-9:
                    raise NumericalError(f"{name} = {v:.3e} is negative beyond quadrature noise")
                log.warning("clamping %s = %.3e to zero", name, v)
                v = 0.0
            object.__setattr__(self, name, v)

    @property
    def total(self):
        return self.R_e + self.R_g


@dataclass(frozen=True, eq=False)
class PopulationTrace:
    """Populations on a time grid plus solver metadata."""

    times: np.ndarray
    P_e: np.ndarray
    scheme: str
    dt: float = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise DomainError(f"scheme must be one of {SCHEMES}")
        t = np.asarray(self.times, dtype=float)
        p = np.asarray(self.P_e, dtype=float)
        if t.shape != p.shape:
            raise DomainError("times and P_e must have equal length")
        if np.any(p < 0) or np.any(p > 1):
            raise DomainError("populations must lie in [0, 1]")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "P_e", p)

    @property
    def P_g(self):
        return 1.0 - self.P_e


def _clip(p, where):
    if p < 0 or p > 1:
        if p < -1e-6 or p > 1 + 1e-6:
            log.warning("population %.6g left [0, 1] at %s; clipped", p, where)
        return min(max(p, 0.0), 1.0)
    return p


# --- apparatus factors on grids ----------------------------------------------

def _period_factors(sched, n_periods):
    """``c[k]`` for measurements ``k = 1..n_periods`` (index 0 unused)."""
    return np.concatenate([[1.0 + 0.0j], sched.factor_array(max(n_periods, 1))])


def _ga_row(sched, c, nt, ns):
    """``g_A`` for one target free interval ``nt`` and many source
    intervals ``ns`` (0 marks a measurement window)."""
    out = np.zeros(ns.shape, dtype=complex)
    if nt == 0:
        return out
    valid = ns > 0
    k = nt - ns[valid]
    if sched.identical:
        z = c[1]
        out[valid] = z ** k if z != 0 else (k == 0).astype(complex)
        return out
    # suffix products prod_{l=m+1}^{nt} c_l for m = 0..nt
    suf = np.ones(nt + 1, dtype=complex)
    for m in range(nt - 1, -1, -1):
        suf[m] = suf[m + 1] * c[m + 1]
    out[valid] = suf[ns[valid]]
    return out


def _memory_periods(sched, limit):
    """Number of whole periods after which ``|g_A|`` is negligible."""
    g = sched.gamma_max
    if g >= 1.0:
        return limit
    if g == 0.0:
        return 1
    return min(limit, int(math.ceil(math.log(_GA_CUTOFF) / math.log(g))) + 1)


# --- time-local rates ---------------------------------------------------------

class _Moments:
    """Cached time integrals of the bath correlation functions."""

    def __init__(self, b, rtol=1e-10):
        self.b = b
        self.rtol = rtol
        self._cache = {}

    def psi1(self, u, branch):
        key = (1, branch, float(u))
        if key not in self._cache:
            self._cache[key] = bathcorr.corr_integral(self.b, float(u), branch, self.rtol)
        return self._cache[key]

    def psi2(self, u, branch):
        key = (2, branch, float(u))
        if key not in self._cache:
            self._cache[key] = bathcorr.corr_integral2(self.b, float(u), branch, self.rtol)
        return self._cache[key]


def _snap(x, scale):
    """Round lags to a fixed grid so that periodic repeats share cache keys."""
    return round(x / scale, 9) * scale


def timelocal_rates(b, sched, t, moments=None):
    """Time-local rates ``R_{e,g}(t) = int_0^t F^{+,-}(t, s) ds``.

    Exact up to quadrature: every free interval contributes a difference
    of first time integrals of ``g_B``. Returns a :class:`RatePair`
    without clamping (the time-local rates may be negative).
    """
    if not np.isfinite(t) or t < 0:
        raise DomainError("t must be finite and nonnegative")
    m = moments or _Moments(b)
    p, tau_M = sched.period, sched.tau_M
    nt = int(free_index(np.array(t), sched))
    if t == 0 or nt == 0:
        return 0.0, 0.0
    c = _period_factors(sched, nt)
    ns = np.arange(nt, 0, -1)
    ga = _ga_row(sched, c, nt, ns)
    out = []
    for branch in ("plus", "minus"):
        total = 0.0 + 0.0j
        for k, g in zip(ns, ga):
            if abs(g) < _GA_CUTOFF:
                break
            u_lo = max(0.0, t - k * p)
            u_hi = t - (k - 1) * p - tau_M
            lo = m.psi1(_snap(u_lo, p), branch) if u_lo > 0 else 0.0
            total += g * (m.psi1(_snap(u_hi, p), branch) - lo)
        out.append(2.0 * total.real)
    return tuple(out)


# --- coarse-grained rates -----------------------------------------------------

def _cg_closed(b, tau, make_filter, make_filter_conj, rtol=1e-10):
    """Closed-form coarse-grained rates for any filter pair.

    At ``T > 0`` the terms with occupation ``n`` see the filter at the
    opposite phase because their bath factor is complex conjugated.
    """
    s = b.spectrum
    gp, gn = b.weighted(1.0), b.weighted(0.0)
    R_e = filtered_rate(gp, s, tau, 1.0, make_filter, rtol)
    R_g = filtered_rate(gp, s, tau, -1.0, make_filter, rtol)
    if b.T > 0:
        R_e += filtered_rate(gn, s, tau, -1.0, make_filter_conj, rtol)
        R_g += filtered_rate(gn, s, tau, 1.0, make_filter_conj, rtol)
    return R_e, R_g


def _cg_average(b, sched, N, moments):
    """Average of ``R_{e,g}(t)`` over the first ``N`` periods.

    Uses the integrals of ``R(t)`` over whole free intervals, which are
    second differences of the second time integral of ``g_B``; periodicity
    of ``g_A`` lets the ``N``-period average collapse to one sum over the
    period lag ``k`` weighted by ``(N - k)/N``.
    """
    p, tau, tau_M = sched.period, sched.tau, sched.tau_M
    kmax = min(N - 1, _memory_periods(sched, N))
    c = _period_factors(sched, N)
    rates = []
    for branch in ("plus", "minus"):
        psi2 = lambda u: moments.psi2(_snap(u, p), branch) if u > 0 else 0.0
        total = 0.0 + 0.0j
        if sched.identical:
            weights = [c[1] ** k if k else 1.0 for k in range(kmax + 1)]
            ks = range(kmax + 1)
            for k, g in zip(ks, weights):
                if k == 0:
                    ik = psi2(tau)
                else:
                    ik = (psi2(k * p + tau) - psi2(k * p)) - (psi2(k * p) - psi2((k - 1) * p + tau_M))
                total += (N - k) * g * ik
        else:
            # free interval nt sees products of the factors nt-k+1..nt
            for nt in range(1, N + 1):
                g = 1.0 + 0.0j
                for k in range(0, min(nt, kmax + 1)):
                    if k:
                        g *= c[nt - k + 1]
                    if k == 0:
                        ik = psi2(tau)
                    else:
                        ik = (psi2(k * p + tau) - psi2(k * p)) - (psi2(k * p) - psi2((k - 1) * p + tau_M))
                    total += g * ik
                    if abs(g) < _GA_CUTOFF:
                        break
        rates.append(2.0 * total.real / (N * p))
    return tuple(rates)


def coarse_grained_rates(b, sched, method="auto", N=None, rtol=1e-10):
    """Period-averaged decay rates.

    ``method="closed"`` evaluates the filtered-spectrum integrals (the
    measurement duration enters only through the period, i.e. the
    ``tau_M << tau`` form). ``method="average"`` averages the exact
    time-local rates over ``N`` periods, with
    ``N = max(1000, 10 * ceil(tau_F / p))`` by default. ``"auto"`` picks
    ``closed`` at zero temperature and ``average`` otherwise.
    """
    if method == "auto":
        method = "closed" if b.T == 0 else "average"
    if method == "closed":
        if not sched.identical:
            raise DomainError("the closed form needs identical measurements")
        if sched.gamma >= 1.0:
            raise SingularFilterError("the closed form is singular at gamma = 1; "
                                      "use coarse_grained_rates_pmp for pulses")
        R_e, R_g = _cg_closed(b, sched.tau, h_filter(sched.gamma, sched.theta),
                              h_filter(sched.gamma, -sched.theta % (2 * np.pi)), rtol)
        return RatePair(R_e, R_g)
    if method != "average":
        raise DomainError(f"unknown method {method!r}")
    if N is None:
        tau_f = bathcorr.tau_A(sched)
        ratio = tau_f / sched.period if np.isfinite(tau_f) else 100.0
        N = max(1000, 10 * int(math.ceil(ratio)))
    R_e, R_g = _cg_average(b, sched, int(N), _Moments(b, rtol))
    return RatePair(R_e, R_g)


def coarse_grained_rates_pmp(b, tau, theta, N=1000, rtol=1e-8):
    """Coarse-grained rates under ``N`` phase-modulation pulses."""
    if int(N) != N or N < 2:
        raise DomainError("need N >= 2 pulses")
    theta = theta % (2 * np.pi)
    R_e, R_g = _cg_closed(b, tau, g_filter(theta, int(N)),
                          g_filter(-theta % (2 * np.pi), int(N)), rtol)
    return RatePair(R_e, R_g)


# --- Markovian solution -------------------------------------------------------

def steady_state(rates):
    """``(P_g, P_e)`` fixed point of the Markovian rate equation."""
    tot = rates.R_e + rates.R_g
    if tot <= 0:
        raise DomainError("steady state undefined: both rates vanish")
    return rates.R_e / tot, rates.R_g / tot


def solve_markov(rates, P_e0=1.0, t_final=1.0, n_points=201):
    """Closed-form solution of the coarse-grained rate equation."""
    if not 0 <= P_e0 <= 1:
        raise DomainError("P_e0 must lie in [0, 1]")
    times = np.linspace(0.0, t_final, n_points)
    tot = rates.total
    if tot == 0:
        log.info("both rates vanish; populations stay constant")
        return PopulationTrace(times, np.full(times.shape, P_e0), "markov",
                               meta={"note": "zero rates"})
    p_st = rates.R_g / tot
    pe = p_st + (P_e0 - p_st) * np.exp(-tot * times)
    return PopulationTrace(times, np.clip(pe, 0.0, 1.0), "markov",
                           meta={"R_e": rates.R_e, "R_g": rates.R_g})


# --- Volterra solver ----------------------------------------------------------

def _check_alignment(sched, dt):
    for name, val in (("tau", sched.tau), ("tau_M", sched.tau_M)):
        q = val / dt
        if abs(q - round(q)) > 1e-9 * max(1.0, q):
            raise ConfigurationError(f"dt = {dt} must divide {name} = {val}")


def _cell_moments(b, dt, n_lags, rtol):
    """Double integrals of ``g_B(t' - s)`` over step/cell pairs.

    For lag index ``m`` the step ``t' in [t_{n-1}, t_n]`` and the cell
    ``s in [s_j, s_j + dt]`` with ``t_{n-1} - s_j = m dt`` (a triangle
    ``s <= t'`` for ``m = 0``). Writing ``x = t' - t_{n-1}`` and
    ``y = s - s_j``, returns per branch the arrays

    ``I0 = int g``, ``I1 = int g y`` and ``J = int g x``,

    all from the second and third time integrals of ``g_B``.
    """
    u = dt * np.arange(n_lags + 2)
    out = {}
    for branch in ("plus", "minus"):
        p2 = np.array([bathcorr.corr_integral2(b, x, branch, rtol) for x in u])
        p3 = np.array([bathcorr.corr_integral3(b, x, branch, rtol) for x in u])
        I0 = np.empty(n_lags, dtype=complex)
        I1 = np.empty(n_lags, dtype=complex)
        J = np.empty(n_lags, dtype=complex)
        I0[0], I1[0], J[0] = p2[1], p3[1], dt * p2[1] - p3[1]
        if n_lags > 1:
            lo, mid, hi = slice(0, n_lags - 1), slice(1, n_lags), slice(2, n_lags + 1)
            d3 = p3[hi] - 2.0 * p3[mid] + p3[lo]
            I0[1:] = p2[hi] - 2.0 * p2[mid] + p2[lo]
            I1[1:] = d3 - dt * (p2[mid] - p2[lo])
            J[1:] = dt * (p2[hi] - p2[mid]) - d3
        out[branch] = (I0, I1, J)
    return out


def solve_volterra(b, sched, P_e0=1.0, t_final=1.0, dt=None, mode="volterra",
                   rtol=1e-10, max_steps=MAX_STEPS):
    """Integrate the population memory equation on a grid aligned with
    the measurement boundaries.

    Each step advances ``P_e`` by the exact double integral of the kernel
    over the step and the history, with ``P_e`` linear between grid
    points (an implicit product-integration rule of second order).
    Only the populations need resolving, not the bath correlation time.

    Parameters
    ----------
    b : BathState
    sched : MeasurementSchedule
    P_e0 : float
        Initial excited-state population.
    t_final, dt : float
        Final time and step; ``dt`` must divide ``tau`` and ``tau_M``.
    mode : {"volterra", "timelocal"}
        ``"timelocal"`` replaces ``P(s)`` by ``P(t)`` inside the memory
        integral.

    Returns
    -------
    PopulationTrace
        ``meta["R_e_t"]`` and ``meta["R_g_t"]`` hold the time-local rates
        averaged over the step ending at each grid point.
    """
    if dt is None:
        dt = sched.tau / 10
    if not (dt > 0 and t_final >= dt):
        raise ConfigurationError("need 0 < dt <= t_final")
    if not 0 <= P_e0 <= 1:
        raise DomainError("P_e0 must lie in [0, 1]")
    if mode not in ("volterra", "timelocal"):
        raise DomainError("mode must be 'volterra' or 'timelocal'")
    _check_alignment(sched, dt)
    n_steps = int(round(t_final / dt))
    if n_steps > max_steps:
        raise ResourceError(f"{n_steps} steps exceed the history limit {max_steps}; "
                            "use a larger dt")
    steps_per_period = int(round(sched.period / dt))
    n_periods = n_steps // steps_per_period + 2
    mem_periods = _memory_periods(sched, n_periods)
    n_lags = min(n_steps, (mem_periods + 1) * steps_per_period)
    mom = _cell_moments(b, dt, n_lags, rtol)
    I0p, I1p, Jp = mom["plus"]
    I0m, I1m, Jm = mom["minus"]
    I0s, I1s, Js = I0p + I0m, I1p + I1m, Jp + Jm

    c = _period_factors(sched, n_periods)
    times = dt * np.arange(n_steps + 1)
    windows = free_index(times[:-1] + 0.5 * dt, sched)
    P = np.empty(n_steps + 1)
    P[0] = P_e0
    Re_t = np.zeros(n_steps + 1)
    Rg_t = np.zeros(n_steps + 1)

    for n in range(1, n_steps + 1):
        L = min(n, n_lags)
        cells = windows[n - L:n][::-1]  # cell n-1-m for m = 0..L-1
        ga = _ga_row(sched, c, int(windows[n - 1]), cells)
        gain = 2.0 * (ga * I0m[:L]).sum().real
        loss_e = 2.0 * (ga * I0p[:L]).sum().real
        Re_t[n], Rg_t[n] = loss_e / dt, gain / dt
        if mode == "volterra":
            w_new = 2.0 * (ga * I1s[:L]).real / dt
            w_old = 2.0 * (ga * I0s[:L]).real - w_new
            older = P[n - L:n][::-1]           # P_j,     j = n-1-m
            newer = P[n - L + 1:n + 1][::-1]   # P_{j+1}; newer[0] is P_n
            known = w_old @ older + w_new[1:] @ newer[1:]
            coef = w_new[0]
        else:
            w_new = 2.0 * (ga * Js[:L]).sum().real / dt
            known = (loss_e + gain - w_new) * P[n - 1]
            coef = w_new
        P[n] = _clip((P[n - 1] - known + gain) / (1.0 + coef), times[n])
    meta = {"R_e_t": Re_t, "R_g_t": Rg_t, "memory_lags": n_lags, "mode": mode}
    return PopulationTrace(times, P, mode, dt=dt, meta=meta)
