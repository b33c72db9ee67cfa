"""How the decay rate of an excited atom depends on the measurement period.

Frequent projective measurements slow the decay down (Zeno regime), while
measurements at intermediate periods can speed it up beyond the natural
rate (anti-Zeno regime). This script walks through both using the
hydrogen-like spectral density.
"""
import numpy as np

from qzeno import SpectralDensity
from qzeno.shorttime import golden_rule, rate_measured, rate_projective
from qzeno.spectra import spectrum_integral

spec = SpectralDensity.hydrogenic(549.5)
natural = golden_rule(spec)
print(f"natural decay rate 2 pi G(1) = {natural:.6f}")
print(f"total coupling strength      = {spectrum_integral(spec):.1f}\n")

taus = np.geomspace(1e-6, 1e2, 33)
rates = np.array([rate_projective(spec, t) for t in taus])
print("   tau        R/R_natural")
for t, r in zip(taus[::4], rates[::4]):
    print(f"  {t:9.2e}   {r / natural:10.4f}")

# where the curve first rises above the natural rate
above = np.nonzero(rates > natural)[0]
lo, hi = taus[above[0] - 1], taus[above[0]]
for _ in range(40):
    mid = np.sqrt(lo * hi)
    lo, hi = (mid, hi) if rate_projective(spec, mid) < natural else (lo, mid)
print(f"\nZeno and anti-Zeno regimes meet at tau = {hi:.3e}")
print(f"small-tau estimate 6 R_nat / omega_c^2 = {6 * natural / 549.5 ** 2:.3e}")

peak = taus[np.argmax(rates)]
print(f"largest enhancement: x{rates.max() / natural:.1f} near tau = {peak:.2e}")

# an imperfect measurement shifts the picture
print("\nimperfect measurements at tau = 1e-3:")
for gamma, theta in ((0.0, 0.0), (0.5, 0.0), (0.8, 0.0), (0.8, np.pi)):
    r = rate_measured(spec, 1e-3, gamma, theta)
    print(f"  gamma = {gamma:.1f}, theta = {theta:.2f}:  R/R_natural = {r / natural:.4f}")
