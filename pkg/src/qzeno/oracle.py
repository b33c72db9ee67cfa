"""Brute-force reference computations.

Everything here avoids the closed forms and the quadrature engine used by
the production paths, so the two can be checked against each other:

* explicit superoperator and tensor-product evolution of repeated
  non-demolition measurements (single vs. many apparatuses),
* the second-order decay rate as a literal sum over discrete bath modes
  and measurement pairs,
* adaptive Simpson quadrature,
* small matrix exponentials by eigendecomposition.
"""
from dataclasses import dataclass
import math

import numpy as np

from .errors import DomainError, NumericalError, ResourceError
from .spectra import eval_spectrum, spectrum_integral

DEFAULT_SEED = 20120101


def _check_hermitian(H, tol=1e-12):
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DomainError("matrix must be square")
    if np.max(np.abs(H - H.conj().T), initial=0.0) > tol * max(1.0, np.abs(H).max(initial=0.0)):
        raise DomainError("matrix must be Hermitian")
    return H


def expm_small(H, t):
    """``exp(-1j * H * t)`` for a small Hermitian ``H`` via ``eigh``."""
    H = _check_hermitian(H)
    if H.shape[0] > 8:
        raise DomainError("expm_small is limited to dimension 8")
    w, v = np.linalg.eigh(0.5 * (H + H.conj().T))
    return (v * np.exp(-1j * w * t)) @ v.conj().T


class DensityMatrix(np.ndarray):
    """Validated density matrix (Hermitian, unit trace, PSD, dim <= 16)."""

    def __new__(cls, entries):
        rho = np.array(entries, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] > 16:
            raise DomainError("density matrix must be square with dim <= 16")
        if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
            raise DomainError("density matrix must be Hermitian")
        if abs(np.trace(rho) - 1.0) > 1e-12:
            raise DomainError("density matrix must have unit trace")
        if np.linalg.eigvalsh(rho).min() < -1e-10:
            raise DomainError("density matrix must be positive semidefinite")
        return rho.view(cls)


def random_density_matrix(dim, rng):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_unitary(dim, rng):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(dim, rng, scale=1.0):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (a + a.conj().T)


def pointer_overlaps(hamiltonians, app_state, tau_M):
    """Matrix ``O[i, j] = <A_i|A_j>`` of pointer-state overlaps."""
    states = np.array([expm_small(h, tau_M) @ app_state for h in hamiltonians])
    return states.conj() @ states.T


def superop_L(rho, overlaps):
    """Dephasing map of one non-demolition measurement.

    ``overlaps[i, j] = <A_i|A_j>``. Tracing out the apparatus multiplies
    the coherence ``rho[i, j]`` by ``<A_j|A_i>``, i.e. the conjugate entry.
    """
    rho = np.asarray(rho, dtype=complex)
    O = np.asarray(overlaps, dtype=complex)
    if O.shape != rho.shape:
        raise DomainError("overlap matrix shape does not match rho")
    if np.max(np.abs(O - O.conj().T)) > 1e-12:
        raise DomainError("overlap matrix must be Hermitian")
    if np.max(np.abs(np.diag(O) - 1.0)) > 1e-12:
        raise DomainError("overlap matrix must have unit diagonal")
    if np.abs(O).max() > 1.0 + 1e-12:
        raise DomainError("overlap entries must have modulus <= 1")
    return rho * O.conj()


def repeated_evolution(rho0, u_F, overlaps=None, n=1, model="single", *,
                       hamiltonians=None, app_state=None, tau_M=None):
    """System state after ``n`` measurement + free-evolution cycles.

    ``model="single"`` applies ``(U o L)^n`` with the overlap matrix.
    ``model="multi"`` builds the explicit tensor product of the system with
    ``n`` fresh apparatuses, applies the conditional measurement unitaries
    ``sum_j |j><j| (x) exp(-i H_j tau_M)`` one apparatus at a time, and
    traces all apparatuses out at the end. It needs the apparatus
    ``hamiltonians`` (one per system level), ``app_state`` and ``tau_M``.
    """
    rho = np.asarray(rho0, dtype=complex)
    u_F = np.asarray(u_F, dtype=complex)
    dim = rho.shape[0]
    if np.max(np.abs(u_F.conj().T @ u_F - np.eye(dim))) > 1e-12:
        raise DomainError("u_F must be unitary")
    if n > 1000:
        raise ResourceError("n is limited to 1000")
    if n == 0:
        return rho.copy()
    if model == "single":
        if overlaps is None:
            overlaps = pointer_overlaps(hamiltonians, app_state, tau_M)
        for _ in range(n):
            rho = u_F @ superop_L(rho, overlaps) @ u_F.conj().T
        return rho
    if model != "multi":
        raise DomainError(f"unknown model {model!r}")
    if n > 10:
        raise ResourceError("multi-apparatus model needs 2**n memory; n <= 10")
    app_state = np.asarray(app_state, dtype=complex)
    da = app_state.size
    if da > 2:
        raise ResourceError("multi-apparatus model supports apparatus dim <= 2")
    # state kept as a tensor with axes (sys, a1..an, sys', a1'..an')
    big = _product_state(rho, app_state, n)
    Ms = [expm_small(h, tau_M) for h in hamiltonians]
    for m in range(n):
        # conditional unitary on (sys, a_m)
        C = np.zeros((dim, da, dim, da), dtype=complex)
        for j in range(dim):
            C[j, :, j, :] = Ms[j]
        big = _apply_two(big, C, m, n)
        big = _apply_sys(big, u_F, n)
    # partial trace over all apparatuses
    t = big
    for k in range(n):
        # axes: sys, a1..a(n-k), sys', a1'..a(n-k)'; trace first apparatus
        nk = n - k
        t = np.trace(t, axis1=1, axis2=2 + nk)
    return t


def _product_state(rho, psi, n):
    pa = np.outer(psi, psi.conj())
    t = rho
    for _ in range(n):
        t = np.multiply.outer(t, pa)
    # current axes: sys, sys', a1, a1', ..., an, an'
    ket = [0] + [2 + 2 * k for k in range(n)]
    bra = [1] + [3 + 2 * k for k in range(n)]
    return np.transpose(t, ket + bra)


def _apply_two(t, C, m, n):
    """Apply ``C`` (axes out_sys, out_a, in_sys, in_a) on (sys, a_m) as
    ``C rho C^dagger``."""
    ks, ka = 0, 1 + m
    bs, ba = n + 1, n + 2 + m
    t = np.tensordot(C, t, axes=([2, 3], [ks, ka]))
    # new axes 0,1 are (sys, a_m); move them back
    t = np.moveaxis(t, [0, 1], [ks, ka])
    Cc = C.conj()
    t = np.tensordot(t, Cc, axes=([bs, ba], [2, 3]))
    t = np.moveaxis(t, [-2, -1], [bs, ba])
    return t


def _apply_sys(t, u, n):
    ks, bs = 0, n + 1
    t = np.tensordot(u, t, axes=([1], [ks]))
    t = np.moveaxis(t, 0, ks)
    t = np.tensordot(t, u.conj(), axes=([bs], [1]))
    t = np.moveaxis(t, -1, bs)
    return t


# --- discrete bath ------------------------------------------------------------

@dataclass(frozen=True)
class DiscreteBath:
    """Bath of ``K`` modes on a uniform midpoint grid over the support."""

    omega: np.ndarray
    coupling2: np.ndarray

    @classmethod
    def from_spectrum(cls, spectrum, K):
        lo, hi = spectrum.support
        edges = np.linspace(lo, hi, K + 1)
        omega = 0.5 * (edges[:-1] + edges[1:])
        dw = edges[1] - edges[0]
        return cls(omega=omega, coupling2=eval_spectrum(spectrum, omega) * dw)

    @property
    def K(self):
        return self.omega.size

    def total_coupling(self):
        return float(_pairwise_sum(self.coupling2))


def _pairwise_sum(x):
    """Fixed-order tree reduction (bit-stable regardless of threading)."""
    x = np.asarray(x)
    while x.size > 1:
        if x.size % 2:
            x = np.append(x, 0.0)
        x = x[0::2] + x[1::2]
    return x[0] if x.size else 0.0


def discrete_mode_sum(db, sched, t_F=None, N=None, budget=1e9, threads=1):
    r"""Second-order decay rate as a literal mode and measurement-pair sum.

    .. math::

        R = \frac{\tau^2}{t_F} \sum_k |g_k|^2 \mathrm{sinc}^2(\Delta_k\tau/2)
            \Big[N + 2\sum_{m=1}^N \sum_{n<m}
            \mathrm{Re}\big(e^{i(n-m)\Delta_k p}\prod_{l=n+1}^m c_l\big)\Big]

    The inner pair sum is accumulated measurement by measurement; no
    geometric-series closed form is used. Modes are split into blocks that
    may run on ``threads`` workers; the final reduction is a fixed-order
    pairwise sum, so the result does not depend on the thread count.
    """
    p = sched.period
    if N is None:
        if t_F is None:
            raise DomainError("give t_F or N")
        N = int(round(t_F / p))
    if N < 1:
        raise DomainError("need at least one measurement period")
    if t_F is None:
        t_F = N * p
    if N * db.K > budget:
        raise ResourceError(f"N*K = {N * db.K:.3g} exceeds the work budget {budget:.3g}")
    c = sched.factor_array(N)
    blocks = [slice(i, min(i + 4096, db.K)) for i in range(0, db.K, 4096)]

    def block_terms(sl):
        return _mode_terms(db.omega[sl], db.coupling2[sl], sched.tau, p, c)

    if threads > 1 and len(blocks) > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(block_terms, blocks))
    else:
        parts = [block_terms(sl) for sl in blocks]
    terms = np.concatenate(parts) if parts else np.zeros(0)
    return float(sched.tau ** 2 / t_F * _pairwise_sum(terms))


def _mode_terms(omega, coupling2, tau, p, c):
    delta = omega - 1.0
    x = 0.5 * delta * tau
    safe = np.where(x == 0, 1.0, x)
    sinc2 = np.where(x == 0, 1.0, (np.sin(safe) / safe) ** 2)
    phase = np.exp(-1j * delta * p)
    # acc_m = sum_{n<m} e^{i(n-m) Delta p} prod_{l=n+1}^m c_l
    acc = np.zeros(omega.size, dtype=complex)
    pair = np.zeros(omega.size)
    for m in range(2, c.size + 1):
        acc = phase * c[m - 1] * (acc + 1.0)
        pair += acc.real
    return coupling2 * sinc2 * (c.size + 2.0 * pair)


def pair_sum_naive(z_list, phase):
    """O(N^2) double loop over measurement pairs for one detuning.

    ``z_list[l-1]`` is the factor of measurement ``l``; ``phase`` is
    ``exp(-1j * Delta * p)``. Returns ``sum_m sum_{n<m} Re(...)``.
    """
    N = len(z_list)
    total = 0.0
    for m in range(1, N + 1):
        prod = 1.0 + 0.0j
        for n in range(m - 1, 0, -1):
            prod *= z_list[n] * phase  # adds measurement n+1
            total += prod.real
    return total


# --- quadrature reference -------------------------------------------------------

def quad_reference(f, a, b, tol=1e-10, max_depth=50):
    """Adaptive Simpson quadrature with interval bisection.

    Intervals are refined until the Richardson error estimate falls below
    their share of ``tol``. Raises :class:`NumericalError` (with the
    partial result) when ``max_depth`` is exceeded.
    """
    if not a < b:
        raise DomainError("need a < b")
    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    whole = (b - a) / 6.0 * (fa + 4 * fm + fb)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    total = 0.0
    while stack:
        lo, hi, flo, fmid, fhi, s, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        fl, fr = f(0.5 * (lo + mid)), f(0.5 * (mid + hi))
        left = (mid - lo) / 6.0 * (flo + 4 * fl + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4 * fr + fhi)
        delta = left + right - s
        if abs(delta) <= 15.0 * eps or depth >= max_depth:
            if depth >= max_depth and abs(delta) > 15.0 * eps:
                raise NumericalError("adaptive Simpson exceeded max depth",
                                     estimate=total + left + right)
            total += left + right + delta / 15.0
        else:
            stack.append((mid, hi, fmid, fr, fhi, right, 0.5 * eps, depth + 1))
            stack.append((lo, mid, flo, fl, fmid, left, 0.5 * eps, depth + 1))
    return total


def simpson_grid(f, a, b, n=100_000):
    """Composite Simpson rule on a fixed grid of ``n`` (even) intervals."""
    n += n % 2
    x = np.linspace(a, b, n + 1)
    y = f(x)
    h = (b - a) / n
    return h / 3.0 * (y[0] + y[-1] + 4 * y[1:-1:2].sum() + 2 * y[2:-1:2].sum())


def spectrum_discretization_check(spectrum, K):
    """Relative mismatch between ``sum |g_k|^2`` and the spectrum integral."""
    db = DiscreteBath.from_spectrum(spectrum, K)
    ref = spectrum_integral(spectrum)
    return abs(db.total_coupling() - ref) / ref if ref else math.nan
