"""Heat-bath spectral densities.

Frequencies are measured in units of the two-level splitting ``omega_eg``;
the coupling prefactor of every built-in spectrum is 1.
"""
from dataclasses import dataclass, field
import csv
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import integrate, optimize

from .errors import DegenerateSpectrumError, DomainError, NumericalError

# relative level below which the spectrum is treated as zero
SUPPORT_LEVEL = 1e-12

KINDS = ("hydrogenic", "ohmic", "tabulated")


@dataclass(frozen=True, eq=False)
class SpectralDensity:
    """Noise spectrum ``G(omega)`` of the bath.

    Use the constructors :meth:`hydrogenic`, :meth:`ohmic` and
    :meth:`tabulated` rather than the raw initializer.

    ``hydrogenic``: ``omega / (1 + (omega/omega_c)**2)**4``;
    ``ohmic``: ``omega * exp(-omega/omega_c)``;
    ``tabulated``: linear interpolation of ``(omega, G)`` pairs, zero
    outside the grid. All kinds vanish for negative frequencies and are
    multiplied by the coupling prefactor ``scale``.
    """

    kind: str
    omega_c: float = None
    table: tuple = field(default=None, repr=False)
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown spectrum kind {self.kind!r}")
        if not (np.isfinite(self.scale) and self.scale >= 0):
            raise DomainError("scale must be finite and nonnegative")
        object.__setattr__(self, "scale", float(self.scale))
        if self.kind == "tabulated":
            omega, g = (np.asarray(c, dtype=float) for c in self.table)
            if omega.ndim != 1 or omega.shape != g.shape or omega.size < 2:
                raise DomainError("table needs two equal-length columns, >= 2 rows")
            if not np.all(np.isfinite(omega)) or not np.all(np.isfinite(g)):
                raise DomainError("table entries must be finite")
            if np.any(np.diff(omega) <= 0):
                raise DomainError("table frequencies must be strictly increasing")
            if omega[0] < 0:
                raise DomainError("table frequencies must be nonnegative")
            if np.any(g < 0):
                raise DomainError("tabulated G must be nonnegative")
            omega.setflags(write=False)
            g.setflags(write=False)
            object.__setattr__(self, "table", (omega, g))
        else:
            if self.omega_c is None or not np.isfinite(self.omega_c) or self.omega_c <= 0:
                raise DomainError("omega_c must be a positive number")
            object.__setattr__(self, "omega_c", float(self.omega_c))

    @classmethod
    def hydrogenic(cls, omega_c=549.5, scale=1.0):
        return cls("hydrogenic", omega_c=omega_c, scale=scale)

    @classmethod
    def ohmic(cls, omega_c=500.0, scale=1.0):
        return cls("ohmic", omega_c=omega_c, scale=scale)

    @classmethod
    def tabulated(cls, omega, g, scale=1.0):
        return cls("tabulated", table=(omega, g), scale=scale)

    @classmethod
    def from_csv(cls, path, scale=1.0):
        """Read a two-column ``omega,G`` CSV file (header optional)."""
        rows = []
        with open(Path(path), newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    rows.append((float(row[0]), float(row[1])))
                except ValueError:
                    if rows:
                        raise
        if not rows:
            raise DomainError(f"no data rows in {path}")
        omega, g = zip(*rows)
        return cls.tabulated(omega, g, scale=scale)

    def __call__(self, omega):
        return eval_spectrum(self, omega)

    def describe(self):
        """Plain dict suitable for serialization."""
        if self.kind == "tabulated":
            d = {"kind": self.kind, "points": int(self.table[0].size)}
        else:
            d = {"kind": self.kind, "omega_c": self.omega_c}
        if self.scale != 1.0:
            d["scale"] = self.scale
        return d

    @cached_property
    def peak(self):
        """``(omega_max, G_max)``."""
        if self.kind == "hydrogenic":
            w = self.omega_c / np.sqrt(7.0)
        elif self.kind == "ohmic":
            w = self.omega_c
        else:
            omega, g = self.table
            i = int(np.argmax(g))
            return float(omega[i]), self.scale * float(g[i])
        return w, float(eval_spectrum(self, w))

    @cached_property
    def support(self):
        """Closed interval outside which ``G < 1e-12 * max G``."""
        if self.kind == "tabulated":
            omega, g = self.table
            nz = np.nonzero(g > 0)[0]
            if nz.size == 0:
                return float(omega[0]), float(omega[0])
            i0 = max(nz[0] - 1, 0)
            i1 = min(nz[-1] + 1, omega.size - 1)
            return float(omega[i0]), float(omega[i1])
        return 0.0, _upper_crossing(self, SUPPORT_LEVEL)

    @cached_property
    def features(self):
        """Frequencies where ``G`` has kinks or changes its scale."""
        lo, hi = self.support
        if self.kind == "tabulated":
            omega = self.table[0]
            if omega.size > 20_000:
                omega = omega[:: omega.size // 20_000 + 1]
            return np.unique(np.concatenate([omega, [lo, hi]]))
        wc = self.omega_c
        grid = wc * np.geomspace(1e-4, hi / wc, 64)
        return np.unique(np.concatenate([[0.0, 1.0, self.peak[0], hi], grid]))


def eval_spectrum(s, omega):
    """Evaluate ``G(omega)``; scalar in, float out; arrays map elementwise."""
    w = np.asarray(omega, dtype=float)
    if not np.all(np.isfinite(w)):
        raise DomainError("spectrum evaluated at a non-finite frequency")
    if s.kind == "tabulated":
        grid, g = s.table
        out = np.interp(w, grid, g, left=0.0, right=0.0)
        out = np.where(w < 0, 0.0, out)
    else:
        wp = np.maximum(w, 0.0)
        if s.kind == "hydrogenic":
            out = wp / (1.0 + (wp / s.omega_c) ** 2) ** 4
        else:
            out = wp * np.exp(-wp / s.omega_c)
    if s.scale != 1.0:
        out = s.scale * out
    if out.ndim == 0:
        return float(out)
    return out


def _upper_crossing(s, level):
    # the crossing depends on the shape only, not on the prefactor
    w_max = s.peak[0]
    unit = SpectralDensity(s.kind, s.omega_c, s.table)
    target = level * eval_spectrum(unit, w_max)
    f = lambda w: eval_spectrum(unit, w) - target
    hi = 2.0 * w_max
    while f(hi) > 0:
        hi *= 2.0
    return optimize.brentq(f, w_max, hi, xtol=1e-12 * hi, rtol=1e-14)


def spectrum_integral(s, rtol=1e-8):
    """``int_0^inf G(omega) d omega`` by adaptive quadrature over the support."""
    lo, hi = s.support
    if hi <= lo:
        return 0.0
    if s.kind == "tabulated":
        # exact for piecewise-linear data
        omega, g = s.table
        return s.scale * float(integrate.trapezoid(g, omega))
    edges = s.features
    total, err = 0.0, 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, e = integrate.quad(lambda w: eval_spectrum(s, w), a, b,
                                epsrel=rtol * 1e-2, epsabs=0.0, limit=200)
        total += val
        err += e
    if err > rtol * abs(total):
        raise NumericalError("spectrum integral did not converge",
                             estimate=total, error=err)
    return total


def support_width(s, rel_threshold):
    """Smallest interval outside which ``G < rel_threshold * max G``."""
    if not 0.0 < rel_threshold < 1.0:
        raise DomainError("rel_threshold must lie in (0, 1)")
    w_max, g_max = s.peak
    if g_max <= 0.0:
        raise DegenerateSpectrumError("spectrum vanishes identically")
    target = rel_threshold * g_max
    if s.kind == "tabulated":
        omega, g = s.table
        g = s.scale * g
        above = np.nonzero(g >= target)[0]
        i0, i1 = above[0], above[-1]
        lo = omega[i0]
        if i0 > 0:
            lo = np.interp(target, [g[i0 - 1], g[i0]], [omega[i0 - 1], omega[i0]])
        hi = omega[i1]
        if i1 < omega.size - 1:
            hi = np.interp(target, [g[i1 + 1], g[i1]], [omega[i1 + 1], omega[i1]])
        return float(lo), float(hi)
    f = lambda w: eval_spectrum(s, w) - target
    lo = optimize.brentq(f, 0.0, w_max, xtol=1e-14 * w_max, rtol=1e-14)
    return lo, _upper_crossing(s, rel_threshold)
