"""Long-time populations under repeated imperfect measurements.

The memory equation for the excited population is solved directly and
compared with the Markovian rate equation built from coarse-grained
rates. We then look at the steady state, which approaches one half for
very frequent measurements and zero for rare ones.
"""
import numpy as np

from qzeno import BathState, MeasurementSchedule, SpectralDensity
from qzeno.rateq import coarse_grained_rates, solve_volterra, steady_state

bath = BathState(SpectralDensity.ohmic(500.0, scale=1e-3))
sched = MeasurementSchedule(tau=0.1, gamma=0.5)
rates = coarse_grained_rates(bath, sched)
print(f"coarse-grained rates: R_e = {rates.R_e:.5f}, R_g = {rates.R_g:.3e}")

trace = solve_volterra(bath, sched, t_final=8.0, dt=0.05)
p_st = rates.R_g / rates.total
markov = p_st + (1 - p_st) * np.exp(-rates.total * trace.times)
print("\n    t     memory eq.   Markov")
for i in range(0, trace.times.size, 32):
    print(f"{trace.times[i]:6.2f}   {trace.P_e[i]:.6f}   {markov[i]:.6f}")
print(f"largest gap: {np.max(np.abs(trace.P_e - markov)):.2e}")

hyd = BathState(SpectralDensity.hydrogenic(549.5))
print("\nsteady-state excited population, hydrogen-like bath, gamma = 0.3")
for tau in (1e-5, 1e-3, 1e-1, 1e1, 1e3):
    r = coarse_grained_rates(hyd, MeasurementSchedule(tau=tau, gamma=0.3))
    print(f"  tau = {tau:7.0e}:  P_e = {steady_state(r)[1]:.5f}")
