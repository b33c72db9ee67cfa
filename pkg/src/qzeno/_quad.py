r"""Vectorized adaptive Gauss-Kronrod quadrature and the scaled-frequency
integral shared by every rate and correlation function.

Most quantities in this package have the form

.. math::

    I = \int d\eta\, S(\eta/u + s)\, K(\eta)\, W(\eta)

where ``S`` is a (thermally weighted) spectral density, ``u`` a time scale,
``s = \pm\omega_{eg}`` a frequency shift, ``K`` an oscillatory kernel with a
slowly decaying envelope and ``W`` a filter that is periodic in ``eta``.

The integral is split with a smooth partition of unity. Close to ``eta = 0``
(and next to the lower spectral edge) the integrand is integrated directly on
panels cut at every multiple of ``2 pi``. Far away the envelope of ``K`` and
the spectrum vary slowly on the scale of one period, so only the Fourier
lines of ``K * W`` with (nearly) zero frequency survive; those are integrated
as smooth functions. All other lines are suppressed faster than any power of
the taper width.
"""
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import NumericalError

# 21-point Kronrod rule and its embedded 10-point Gauss rule (QUADPACK qk21).
_XGK = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
])
_WGK = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208034383930,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

# symmetric node set on [-1, 1]
NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[-2::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[-2::-1]])
GAUSS_WEIGHTS = np.zeros(21)
GAUSS_WEIGHTS[1:10:2] = _WG
GAUSS_WEIGHTS[11:20:2] = _WG[::-1]

_EPS = np.finfo(float).eps
# absolute floor for integrands that underflow
_TINY = 1e-280


def gk_integrate(f, breakpoints, rtol=1e-10, atol=0.0, max_panels=4_000_000,
                 chunk=100_000, max_iter=60, noise=0.0):
    """Adaptive 21-point Gauss-Kronrod quadrature over a panel list.

    Parameters
    ----------
    f : callable
        Vectorized integrand; receives a 2-D array of abscissae and returns
        an array of the same shape (real or complex).
    breakpoints : array_like
        Sorted or unsorted panel edges; the integral runs from the smallest
        to the largest.
    rtol, atol : float
        Global tolerance ``max(atol, rtol * |I|)``.
    noise : float
        Relative accuracy of the integrand values. Panels whose error
        estimate is below this fraction of ``int |f|`` are accepted, since
        refining them cannot help.

    Returns
    -------
    value, error : scalar, float
    """
    edges = np.unique(np.asarray(breakpoints, dtype=float))
    if edges.size < 2:
        return 0.0, 0.0
    a, b = edges[:-1], edges[1:]
    total_width = edges[-1] - edges[0]
    acc_val = 0.0
    acc_err = 0.0
    acc_abs = 0.0
    for _ in range(max_iter):
        if a.size > max_panels:
            raise NumericalError(
                f"quadrature needs more than {max_panels} panels",
                estimate=acc_val, error=acc_err)
        val, err, absval = _eval_panels(f, a, b, chunk)
        total = acc_val + val.sum()
        scale = acc_abs + absval.sum()
        tol = max(atol, rtol * abs(total), 1e-3 * rtol * scale)
        local = tol * (b - a) / total_width
        floor = max(50 * _EPS, noise)
        ok = (err <= local) | (err <= floor * absval) | (err <= _TINY) | ((b - a) < 1e-13 * total_width)
        acc_val = acc_val + val[ok].sum()
        acc_err += err[ok].sum()
        acc_abs += absval[ok].sum()
        if ok.all():
            return acc_val, acc_err
        a, b = a[~ok], b[~ok]
        mid = 0.5 * (a + b)
        a, b = np.concatenate([a, mid]), np.concatenate([mid, b])
    raise NumericalError("quadrature did not converge", estimate=acc_val + val.sum(),
                         error=acc_err + err.sum())


def _eval_panels(f, a, b, chunk):
    vals, errs, abss = [], [], []
    for i in range(0, a.size, chunk):
        aa, bb = a[i:i + chunk, None], b[i:i + chunk, None]
        half = 0.5 * (bb - aa)
        x = 0.5 * (aa + bb) + half * NODES
        fx = f(x)
        k = (fx @ KRONROD_WEIGHTS) * half[:, 0]
        g = (fx @ GAUSS_WEIGHTS) * half[:, 0]
        vals.append(k)
        errs.append(np.abs(k - g))
        abss.append((np.abs(fx) @ KRONROD_WEIGHTS) * half[:, 0])
    return np.concatenate(vals), np.concatenate(errs), np.concatenate(abss)


# --- scaled-frequency integral ----------------------------------------------

# half-width of the directly integrated core and of the smooth taper, in eta
CORE = 2 * np.pi * 40
TAPER = 2 * np.pi * 40
# Fourier lines with |nu| below this are kept in the far region
SLOW = 0.5


def _step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.clip(x, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        p = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        q = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return p / (p + q)


def window(eta, lower):
    """Partition of unity: 1 near ``eta = 0`` and right above ``lower``."""
    return 1.0 - window_complement(eta, lower)


def window_complement(eta, lower):
    """``1 - window``, computed without cancellation."""
    c0 = _step((np.abs(eta) - CORE) / TAPER)
    c1 = np.where(eta >= lower, _step((eta - lower - CORE) / TAPER), 1.0)
    return c0 * c1


@dataclass(frozen=True)
class Kernel:
    """Oscillatory kernel ``K(eta)``.

    ``near`` evaluates the kernel itself. ``far`` lists its decomposition
    into smooth envelopes times trigonometric lines,
    ``K = sum_j amp_j(eta) * sum_(nu, c) c exp(i nu eta)``.
    """

    near: Callable
    far: Sequence = field(default_factory=tuple)


@dataclass(frozen=True)
class Filter:
    """Filter ``W(eta)`` with its Fourier lines near zero frequency."""

    near: Callable
    lines: Sequence = ((0.0, 1.0),)
    breakpoints: Callable = None
    noise: float = 0.0


UNIT_FILTER = Filter(near=lambda eta: np.ones_like(eta))


def eta_integral(spec, omega_lo, omega_hi, features, u, shift, kernel,
                 filt=UNIT_FILTER, rtol=1e-10):
    r"""Evaluate :math:`\int d\eta\, S(\eta/u + s) K(\eta) W(\eta)`.

    ``spec`` is evaluated on ``omega in [omega_lo, omega_hi]`` only;
    ``features`` are frequencies where it has kinks or changes scale.
    Returns a complex number.
    """
    lo = u * (omega_lo - shift)
    hi = u * (omega_hi - shift)
    if hi <= lo:
        return 0.0 + 0.0j
    feats = u * (np.asarray(features, dtype=float) - shift)
    feats = feats[(feats > lo) & (feats < hi)]

    # near region: [lo, hi] restricted to the support of the window
    reach = CORE + TAPER
    spans = []
    for a, b in ((-reach, reach), (lo, lo + reach)):
        a, b = max(a, lo), min(b, hi)
        if b > a:
            spans.append((a, b))
    result = 0.0 + 0.0j
    near_pts = []
    for a, b in spans:
        k0, k1 = np.ceil(a / (2 * np.pi)), np.floor(b / (2 * np.pi))
        pts = [a, b] + list(2 * np.pi * np.arange(k0, k1 + 1))
        pts += [p for p in (-CORE, CORE, lo + CORE) if a < p < b]
        pts += list(feats[(feats > a) & (feats < b)])
        if filt.breakpoints is not None:
            pts += list(filt.breakpoints(a, b))
        near_pts.append(np.asarray(pts))
    if spans:
        # overlapping spans are merged so that no panel is counted twice
        edges = np.unique(np.concatenate(near_pts))
        merged = _merge(spans)
        keep = np.zeros(edges.size - 1, dtype=bool)
        mids = 0.5 * (edges[:-1] + edges[1:])
        for a, b in merged:
            keep |= (mids > a) & (mids < b)

        def near(x):
            w = window(x, lo)
            return spec(x / u + shift) * kernel.near(x) * filt.near(x) * w

        for a, b in merged:
            sel = edges[(edges >= a) & (edges <= b)]
            val, _ = gk_integrate(near, sel, rtol=rtol, noise=filt.noise)
            result += val

    # far region: outside the window, only near-zero-frequency lines survive
    terms = []
    for amp, klines in kernel.far:
        for nu_k, c_k in klines:
            for nu_w, c_w in filt.lines:
                nu = nu_k + nu_w
                if abs(nu) < SLOW:
                    terms.append((amp, nu, c_k * c_w))
    regions = []
    if hi > max(lo, CORE):
        regions.append((max(lo, CORE), hi))
    if lo < -CORE:
        regions.append((lo, min(hi, -CORE)))
    for a, b in regions:
        pts = [a, b] + list(feats[(feats > a) & (feats < b)]) + list(_geometric(a, b))
        for amp, nu, c in terms:
            extra = []
            if nu != 0.0:
                n = int(min((b - a) * abs(nu) / np.pi, 1_000_000))
                extra = list(np.linspace(a, b, n + 2))

            def far(x, amp=amp, nu=nu, c=c):
                w = window_complement(x, lo)
                return c * spec(x / u + shift) * amp(x) * w * np.exp(1j * nu * x)

            val, _ = gk_integrate(far, np.asarray(pts + extra), rtol=rtol)
            result += val
    return result


def _merge(spans):
    spans = sorted(spans)
    out = [list(spans[0])]
    for a, b in spans[1:]:
        if a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return [tuple(s) for s in out]


def _geometric(a, b, per_decade=8):
    """Points spaced geometrically in |eta| between a and b (same sign)."""
    if a >= 0:
        lo, hi, sign = max(a, 1.0), b, 1.0
    elif b <= 0:
        lo, hi, sign = max(-b, 1.0), -a, -1.0
    else:
        return np.array([])
    if hi <= lo:
        return np.array([])
    n = max(2, int(np.ceil(np.log10(hi / lo) * per_decade)) + 1)
    return sign * np.geomspace(lo, hi, n)
