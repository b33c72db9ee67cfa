"""Measurement schedules, apparatus decoherence factors and filter functions.

Time is measured in units of ``1/omega_eg``. Measurement ``n`` (1-based)
occupies ``[(n-1) p, (n-1) p + tau_M)`` and free evolution ``n`` occupies
``[(n-1) p + tau_M, n p)`` with period ``p = tau + tau_M``.
"""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, SingularFilterError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class MeasurementSchedule:
    """Periodic measurement schedule.

    Identical measurements carry the factor ``gamma * exp(1j*theta)``.
    Passing ``factors`` (a sequence of ``(gamma_n, theta_n)``) gives
    per-measurement factors instead; past the last entry the final factor
    repeats.
    """

    tau: float
    tau_M: float = 0.0
    gamma: float = 0.0
    theta: float = 0.0
    factors: tuple = None

    def __post_init__(self):
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise DomainError("tau must be positive")
        if not (np.isfinite(self.tau_M) and self.tau_M >= 0):
            raise DomainError("tau_M must be nonnegative")
        object.__setattr__(self, "theta", float(self.theta) % TWO_PI)
        if not 0.0 <= self.gamma <= 1.0:
            raise DomainError("gamma must lie in [0, 1]")
        if self.factors is not None:
            fac = tuple((float(g), float(t) % TWO_PI) for g, t in self.factors)
            if not fac:
                raise DomainError("factor sequence is empty")
            if any(not 0.0 <= g <= 1.0 for g, _ in fac):
                raise DomainError("every gamma_n must lie in [0, 1]")
            object.__setattr__(self, "factors", fac)

    @property
    def period(self):
        return self.tau + self.tau_M

    @property
    def identical(self):
        return self.factors is None

    @property
    def gamma_max(self):
        if self.identical:
            return self.gamma
        return max(g for g, _ in self.factors)

    def factor(self, n):
        """Complex decoherence factor of measurement ``n`` (1-based)."""
        if self.identical:
            return self.gamma * np.exp(1j * self.theta)
        g, t = self.factors[min(n, len(self.factors)) - 1]
        return g * np.exp(1j * t)

    def factor_array(self, n_max):
        """Factors of measurements ``1..n_max`` as a complex array."""
        n = np.arange(1, n_max + 1)
        if self.identical:
            return np.full(n.size, self.gamma * np.exp(1j * self.theta))
        g, t = np.array(self.factors).T
        idx = np.minimum(n, len(self.factors)) - 1
        return g[idx] * np.exp(1j * t[idx])

    def describe(self):
        d = {"tau": self.tau, "tau_M": self.tau_M}
        if self.identical:
            d.update(gamma=self.gamma, theta=self.theta)
        else:
            d["factors"] = [list(f) for f in self.factors]
        return d


@dataclass(frozen=True)
class ApparatusModel:
    """Apparatus with conditional Hamiltonians ``H_g``, ``H_e`` and a
    pure initial pointer state."""

    H_g: np.ndarray
    H_e: np.ndarray
    app_state: np.ndarray

    def __post_init__(self):
        hg = np.asarray(self.H_g, dtype=complex)
        he = np.asarray(self.H_e, dtype=complex)
        psi = np.asarray(self.app_state, dtype=complex)
        dim = psi.size
        if dim > 8 or dim < 1:
            raise DomainError("apparatus dimension must be between 1 and 8")
        for h in (hg, he):
            if h.shape != (dim, dim):
                raise DomainError("Hamiltonian shape does not match the state")
            if np.max(np.abs(h - h.conj().T), initial=0.0) > 1e-12 * max(1.0, np.abs(h).max()):
                raise DomainError("apparatus Hamiltonians must be Hermitian")
        if abs(np.linalg.norm(psi) - 1.0) > 1e-12:
            raise DomainError("apparatus state must be normalized")
        object.__setattr__(self, "H_g", hg)
        object.__setattr__(self, "H_e", he)
        object.__setattr__(self, "app_state", psi)

    @property
    def dim(self):
        return self.app_state.size


class Window(NamedTuple):
    """Which window contains a time: measurement or free evolution ``n``."""

    measuring: bool
    n: int


def filter_h(gamma, x):
    """Measurement filter ``(1 - g^2) / (1 + g^2 - 2 g cos x)``.

    Normalized: its mean over one period is 1. Singular at ``gamma = 1``;
    use :func:`filter_g` for phase-modulation pulses.
    """
    if not 0.0 <= gamma < 1.0:
        if gamma == 1.0:
            raise SingularFilterError(
                "filter_h is singular at gamma = 1; use filter_g for pulses")
        raise DomainError("gamma must lie in [0, 1)")
    x = np.asarray(x, dtype=float)
    # (1 - g)^2 + 4 g sin^2(x/2) avoids cancellation as gamma -> 1
    den = (1.0 - gamma) ** 2 + 4.0 * gamma * np.sin(0.5 * x) ** 2
    out = (1.0 - gamma) * (1.0 + gamma) / den
    return float(out) if out.ndim == 0 else out


def filter_g(x, N):
    """Pulse filter ``sin^2(N x/2) / (N sin^2(x/2))`` (Fejer kernel).

    The removable singularity at ``x = 2 pi n`` evaluates to ``N``.
    """
    if int(N) != N or N < 1:
        raise DomainError("N must be a positive integer")
    N = int(N)
    x = np.asarray(x, dtype=float)
    s = np.sin(0.5 * x)
    small = np.abs(s) < 1e-9
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(small, float(N), np.sin(0.5 * N * x) ** 2 / (N * np.where(small, 1.0, s) ** 2))
    return float(out) if out.ndim == 0 else out


def _split(t, period):
    q = t / period
    k = np.floor(q)
    near = np.rint(q)
    # snap times within rounding of a period boundary onto it
    k = np.where(np.abs(q - near) <= 1e-12 * np.maximum(1.0, np.abs(q)), near, k)
    return k, t - k * period


def interval_index(t, sched):
    """Classify ``t`` as inside measurement ``n`` or free interval ``n``."""
    if not np.isfinite(t) or t < 0:
        raise DomainError("time must be finite and nonnegative")
    k, r = _split(float(t), sched.period)
    n = int(k) + 1
    return Window(bool(r < sched.tau_M), n)


def free_index(t, sched):
    """Vectorized free-interval index: ``n`` if ``t`` is in free interval
    ``n``, 0 if it lies inside a measurement window."""
    t = np.asarray(t, dtype=float)
    k, r = _split(t, sched.period)
    return np.where(r < sched.tau_M, 0, k.astype(np.int64) + 1)


def apparatus_correlation(t, s, sched):
    """Apparatus correlation ``g_A(t, s)`` for ``s <= t``.

    Product of the decoherence factors of the measurements between ``s``
    and ``t`` when both times are in free intervals, zero otherwise.
    """
    if s > t:
        raise DomainError("apparatus correlation needs s <= t")
    if s < 0:
        raise DomainError("time must be nonnegative")
    wt = interval_index(t, sched)
    ws = interval_index(s, sched)
    if wt.measuring or ws.measuring:
        return 0.0 + 0.0j
    if sched.identical:
        return complex(sched.factor(1) ** (wt.n - ws.n))
    out = 1.0 + 0.0j
    for ell in range(ws.n + 1, wt.n + 1):
        out *= sched.factor(ell)
        if out == 0:
            break
    return out


def apparatus_correlation_array(t, s, sched):
    """Vectorized ``g_A`` over broadcast arrays ``t >= s``."""
    nt = free_index(t, sched)
    ns = free_index(s, sched)
    nt, ns = np.broadcast_arrays(nt, ns)
    valid = (nt > 0) & (ns > 0)
    dn = np.where(valid, nt - ns, 0)
    if np.any(dn < 0):
        raise DomainError("apparatus correlation needs s <= t")
    if sched.identical:
        z = sched.factor(1)
        out = np.where(valid, z ** dn.astype(float) if z != 0 else (dn == 0).astype(complex), 0.0)
        return out.astype(complex)
    nmax = int(nt.max(initial=0))
    c = np.concatenate([[1.0 + 0.0j], sched.factor_array(max(nmax, 1))])
    # products over (ns, nt] by cumulative sums of logs would fail on zeros,
    # so use running products from each ns
    out = np.zeros(nt.shape, dtype=complex)
    for idx in np.ndindex(nt.shape):
        if valid[idx]:
            out[idx] = np.prod(c[ns[idx] + 1: nt[idx] + 1])
    return out


def decoherence_factor(app, tau_M):
    """Overlap ``<A_e|A_g>`` after a measurement of duration ``tau_M``.

    Returns ``(gamma, theta)`` with ``gamma`` in [0, 1] and ``theta`` in
    ``[0, 2 pi)``.
    """
    from .oracle import expm_small

    ue = expm_small(app.H_e, tau_M)
    ug = expm_small(app.H_g, tau_M)
    psi = app.app_state
    z = np.vdot(ue @ psi, ug @ psi)
    gamma = float(min(abs(z), 1.0))
    theta = float(np.angle(z)) % TWO_PI if gamma > 0 else 0.0
    if theta >= TWO_PI:
        theta = 0.0
    return gamma, theta
