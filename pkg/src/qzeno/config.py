"""Run configuration for the command-line tool.

A configuration file is YAML (JSON is accepted, being a YAML subset) with
optional sections::

    spectrum: {kind: hydrogenic, omega_c: 549.5, scale: 1.0}
    # or {kind: tabulated, table: path/to/spectrum.csv}
    schedule: {tau: 0.1, tau_M: 0.0, gamma: 0.0, theta: 0.0, factors: seq.csv}
    bath: {temperature: 0.0}
    sweep: {variable: tau, grid: log, min: 1e-6, max: 1e2, points: 200,
            quantity: rate_measured}
    solver: {dt: null, t_final: 10.0, P_e0: 1.0, N: 1000, mode: volterra}
    output: {path: out.csv, format: csv}

Relative file paths are resolved against the directory of the config file.
"""
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigurationError
from .measurement import MeasurementSchedule
from .spectra import SpectralDensity

SPECTRUM_KINDS = ("hydrogenic", "ohmic", "tabulated")
SWEEP_VARIABLES = ("tau", "theta", "gamma")
FORMATS = ("csv", "json")


@dataclass(frozen=True)
class SpectrumConfig:
    kind: str = "hydrogenic"
    omega_c: float = None
    table: str = None
    scale: float = 1.0

    def build(self):
        if self.kind == "hydrogenic":
            return SpectralDensity.hydrogenic(549.5 if self.omega_c is None else self.omega_c,
                                              scale=self.scale)
        if self.kind == "ohmic":
            return SpectralDensity.ohmic(500.0 if self.omega_c is None else self.omega_c,
                                         scale=self.scale)
        return SpectralDensity.from_csv(self.table, scale=self.scale)


@dataclass(frozen=True)
class ScheduleConfig:
    tau: float = 0.1
    tau_M: float = 0.0
    gamma: float = 0.0
    theta: float = 0.0
    factors: str = None

    def build(self, **override):
        params = {"tau": self.tau, "tau_M": self.tau_M, "gamma": self.gamma,
                  "theta": self.theta}
        params.update(override)
        seq = None
        if self.factors is not None:
            data = np.loadtxt(self.factors, delimiter=",", comments="#", ndmin=2)
            if data.shape[1] != 2:
                raise ConfigurationError("factor file needs two columns gamma,theta")
            seq = tuple(map(tuple, data))
        return MeasurementSchedule(factors=seq, **params)


@dataclass(frozen=True)
class SweepConfig:
    variable: str = "tau"
    grid: str = "log"
    min: float = 1e-6
    max: float = 1e2
    points: int = 200
    quantity: str = "rate_measured"

    def values(self):
        if self.grid == "log":
            return np.geomspace(self.min, self.max, self.points)
        return np.linspace(self.min, self.max, self.points)


@dataclass(frozen=True)
class SolverConfig:
    dt: float = None
    t_final: float = 10.0
    P_e0: float = 1.0
    N: int = 1000
    mode: str = "volterra"


@dataclass(frozen=True)
class OutputConfig:
    path: str = None
    format: str = "csv"


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration of one command-line run."""

    spectrum: SpectrumConfig = field(default_factory=SpectrumConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    temperature: float = 0.0
    sweep: SweepConfig = field(default_factory=SweepConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    threads: int = 1
    seed: int = 20120101
    tol: float = 1e-10

    def __post_init__(self):
        validate(self)

    def to_dict(self):
        return asdict(self)

    def with_(self, **changes):
        """Copy with top-level or dotted (``"sweep.points"``) overrides."""
        top = {}
        nested = {}
        for key, val in changes.items():
            if val is None:
                continue
            if "." in key:
                sect, name = key.split(".", 1)
                nested.setdefault(sect, {})[name] = val
            else:
                top[key] = val
        for sect, vals in nested.items():
            top[sect] = replace(getattr(self, sect), **vals)
        return replace(self, **top)


def validate(cfg):
    sp = cfg.spectrum
    if sp.kind not in SPECTRUM_KINDS:
        raise ConfigurationError(f"spectrum.kind must be one of {SPECTRUM_KINDS}")
    if sp.kind == "tabulated":
        if not sp.table:
            raise ConfigurationError("a tabulated spectrum needs spectrum.table")
        if not Path(sp.table).is_file():
            raise ConfigurationError(f"spectrum table {sp.table!r} not found")
    elif sp.omega_c is not None and not sp.omega_c > 0:
        raise ConfigurationError("spectrum.omega_c must be positive")
    if cfg.schedule.factors is not None and not Path(cfg.schedule.factors).is_file():
        raise ConfigurationError(f"factor file {cfg.schedule.factors!r} not found")
    sw = cfg.sweep
    if sw.variable not in SWEEP_VARIABLES:
        raise ConfigurationError(f"sweep.variable must be one of {SWEEP_VARIABLES}")
    if sw.grid not in ("log", "linear"):
        raise ConfigurationError("sweep.grid must be 'log' or 'linear'")
    if not sw.min < sw.max:
        raise ConfigurationError("sweep.min must be below sweep.max")
    if int(sw.points) != sw.points or sw.points < 2:
        raise ConfigurationError("sweep.points must be an integer >= 2")
    if sw.grid == "log" and sw.min <= 0:
        raise ConfigurationError("a log grid needs sweep.min > 0")
    if cfg.output.format not in FORMATS:
        raise ConfigurationError(f"output.format must be one of {FORMATS}")
    if cfg.temperature < 0:
        raise ConfigurationError("bath.temperature must be nonnegative")
    if cfg.threads < 1:
        raise ConfigurationError("threads must be >= 1")
    if not 0 < cfg.tol < 1:
        raise ConfigurationError("tol must lie in (0, 1)")


_FLOAT_KEYS = {"omega_c", "scale", "tau", "tau_M", "gamma", "theta", "min", "max",
               "dt", "t_final", "P_e0"}
_INT_KEYS = {"points", "N"}


def _coerce(cls, key, val):
    """YAML 1.1 reads ``1e-3`` (no decimal point) as a string; fix numbers."""
    if val is None or not isinstance(val, str):
        return val
    try:
        if key in _FLOAT_KEYS:
            return float(val)
        if key in _INT_KEYS:
            return int(float(val))
    except ValueError:
        raise ConfigurationError(f"{cls.__name__}.{key} must be numeric, got {val!r}") from None
    return val


def _section(cls, data, name, base):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigurationError(f"section {name!r} must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigurationError(f"unknown keys in {name!r}: {sorted(unknown)}")
    vals = {k: _coerce(cls, k, v) for k, v in data.items()}
    for key in ("table", "factors"):
        if vals.get(key) is not None:
            p = Path(vals[key])
            vals[key] = str(p if p.is_absolute() else (base / p))
    return cls(**vals)


def load_config(path=None):
    """Read a YAML/JSON configuration; ``None`` gives the defaults."""
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file {str(path)!r} not found")
    try:
        raw = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigurationError("config root must be a mapping")
    allowed = {"spectrum", "schedule", "bath", "sweep", "solver", "output",
               "threads", "seed", "tol"}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigurationError(f"unknown config sections: {sorted(unknown)}")
    base = path.parent
    bath = raw.get("bath") or {}
    if set(bath) - {"temperature"}:
        raise ConfigurationError("bath section accepts only 'temperature'")
    try:
        return RunConfig(
            spectrum=_section(SpectrumConfig, raw.get("spectrum"), "spectrum", base),
            schedule=_section(ScheduleConfig, raw.get("schedule"), "schedule", base),
            temperature=float(bath.get("temperature", 0.0)),
            sweep=_section(SweepConfig, raw.get("sweep"), "sweep", base),
            solver=_section(SolverConfig, raw.get("solver"), "solver", base),
            output=_section(OutputConfig, raw.get("output"), "output", base),
            threads=int(raw.get("threads", 1)),
            seed=int(raw.get("seed", 20120101)),
            tol=float(raw.get("tol", 1e-10)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc)) from None
