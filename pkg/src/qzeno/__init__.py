"""Zeno and anti-Zeno decay of a two-level system under repeated measurements.

The package computes second-order decay rates of an excited two-level
system coupled to a bosonic bath while an apparatus measures it
periodically. Measurements may be ideal, imperfect (partial decoherence
``gamma * exp(i theta)``) or pure phase-modulation pulses.

Modules
-------
spectra      bath spectral densities
measurement  schedules, apparatus factors and filter functions
shorttime    short-time decay rates
bathcorr     bath correlation functions and their time integrals
rateq        time-local, coarse-grained and memory-kernel population dynamics
oracle       brute-force reference implementations
cli          command-line front end
"""
__version__ = "0.1.0"

from .errors import (ConfigurationError, DegenerateSpectrumError, DomainError,
                     NumericalError, ResourceError, SingularFilterError)
from .spectra import SpectralDensity, eval_spectrum, spectrum_integral, support_width
from .measurement import (ApparatusModel, MeasurementSchedule, apparatus_correlation,
                          decoherence_factor, filter_g, filter_h, interval_index)
from .shorttime import (ShortTimeQuery, golden_rule, rate_general, rate_measured,
                        rate_pmp, rate_pmp_comb, rate_projective, zeno_bound)
from .bathcorr import (BathState, bath_corr, correlation_time, effective_corr,
                       tabulate_bath_corr)
from .rateq import (PopulationTrace, RatePair, coarse_grained_rates,
                    coarse_grained_rates_pmp, solve_markov, solve_volterra,
                    steady_state, timelocal_rates)

__all__ = [
    "ApparatusModel", "BathState", "ConfigurationError", "DegenerateSpectrumError",
    "DomainError", "MeasurementSchedule", "NumericalError", "PopulationTrace",
    "RatePair", "ResourceError", "ShortTimeQuery", "SingularFilterError",
    "SpectralDensity", "apparatus_correlation", "bath_corr", "coarse_grained_rates",
    "coarse_grained_rates_pmp", "correlation_time", "decoherence_factor",
    "effective_corr", "eval_spectrum", "filter_g", "filter_h", "golden_rule",
    "interval_index", "rate_general", "rate_measured", "rate_pmp", "rate_pmp_comb",
    "rate_projective", "solve_markov", "solve_volterra", "spectrum_integral",
    "steady_state", "support_width", "tabulate_bath_corr", "timelocal_rates",
    "zeno_bound",
]
