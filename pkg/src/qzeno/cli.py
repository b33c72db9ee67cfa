"""Command-line front end.

Subcommands::

    spectrum   tabulate G(omega) over its support
    rate       short-time decay rate versus tau
    corr       dressed correlation F+(t, 0) and g_B(t)
    rateq      population trace from the memory equation
    steady     coarse-grained steady state versus tau
    fig        data behind figures 3-7
    oracle     equivalence and mode-sum cross-checks (JSON)
    sweep      generic one-parameter sweep from the config file

Exit codes: 0 success, 2 usage or configuration error, 3 numerical
failure, 4 resource limit.
"""
import argparse
from concurrent.futures import ThreadPoolExecutor
import json
import logging
import math
import sys

import numpy as np

from . import __version__
from .bathcorr import BathState, bath_corr, effective_corr_series
from .config import SWEEP_VARIABLES, load_config
from .errors import (ConfigurationError, DegenerateSpectrumError, DomainError,
                     NumericalError, ResourceError)
from .measurement import MeasurementSchedule, filter_h
from .output import write_table
from .rateq import (coarse_grained_rates, coarse_grained_rates_pmp, solve_markov,
                    solve_volterra, steady_state, timelocal_rates)
from .shorttime import (ShortTimeQuery, golden_rule, rate_general, rate_measured,
                        rate_pmp, rate_pmp_comb, rate_projective, sinc2_half)
from .spectra import eval_spectrum, spectrum_integral

log = logging.getLogger("qzeno")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_RESOURCE = 0, 2, 3, 4

# valid (quantity, sweep variable) pairs for ``sweep``
SWEEP_PAIRS = {
    "rate_projective": ("tau",),
    "rate_measured": ("tau", "theta", "gamma"),
    "rate_pmp": ("tau", "theta"),
    "coarse_grained_rates": ("tau", "theta", "gamma"),
    "steady_state": ("tau", "theta", "gamma"),
}

FIG_THETAS = (0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi)
FIG_GAMMAS = (0.0, 0.3, 0.8)
FIG3_PAIRS = ((0.3, 0.0), (0.5, 0.0), (0.8, 0.0), (0.8, 2.0 * math.pi / 3.0))
FIG5_TAUS = (0.003, 0.005, 0.01, 0.1)


class UsageError(Exception):
    """Bad command-line usage detected after parsing."""


# --- helpers -------------------------------------------------------------------

def run_points(fn, values, threads):
    """Evaluate ``fn`` over ``values`` on a worker pool.

    Results come back in input order. On interrupt the rows finished so far
    (a prefix) are returned with ``truncated=True``.
    """
    values = list(values)
    if threads <= 1:
        out = []
        try:
            for v in values:
                out.append(fn(v))
        except KeyboardInterrupt:
            return out, True
        return out, False
    out = []
    with ThreadPoolExecutor(max_workers=threads) as ex:
        futures = [ex.submit(fn, v) for v in values]
        try:
            for fut in futures:
                out.append(fut.result())
        except KeyboardInterrupt:
            for fut in futures:
                fut.cancel()
            return out, True
    return out, False


def _header(cmd, cfg, **extra):
    head = {"version": __version__, "command": cmd, "config": cfg.to_dict()}
    head.update(extra)
    return head


def _emit(cfg, cmd, columns, rows, truncated=False, **extra):
    write_table(cfg.output.path, cfg.output.format, _header(cmd, cfg, **extra),
                columns, rows, truncated)


def _rgr(spec):
    r = golden_rule(spec)
    return r if r > 0 else math.nan


def _sweep_grid(cfg, variable=None):
    sw = cfg.sweep
    if variable is not None and sw.variable != variable:
        raise UsageError(f"this command sweeps {variable}; got sweep.variable = {sw.variable}")
    return sw.values()


def _tau_values(cfg, args):
    if getattr(args, "tau", None) is not None:
        return np.array([cfg.schedule.tau])
    return _sweep_grid(cfg, "tau")


# --- subcommands ------------------------------------------------------------------

def cmd_spectrum(cfg, args):
    spec = cfg.spectrum.build()
    lo, hi = spec.support
    omega = np.linspace(lo, hi if args.omega_max is None else args.omega_max, args.points)
    g = eval_spectrum(spec, omega)
    _emit(cfg, "spectrum", ("omega", "G"), zip(omega, g),
          integral=spectrum_integral(spec), support=[lo, hi], golden_rule=golden_rule(spec))


def _rate_value(spec, sched, method, N, tol):
    if method == "projective":
        return rate_projective(spec, sched.tau, tol)
    if method == "measured":
        return rate_measured(spec, sched.tau, sched.gamma, sched.theta, tol)
    if method == "pmp":
        return rate_pmp(spec, sched.tau, sched.theta, N, max(tol, 1e-8))
    if method == "comb":
        return rate_pmp_comb(spec, sched.tau, sched.theta)
    return rate_general(ShortTimeQuery(spec, sched, N), rtol=tol)


def cmd_rate(cfg, args):
    spec = cfg.spectrum.build()
    rgr = _rgr(spec)
    sched0 = cfg.schedule.build()
    method = args.method
    N = cfg.solver.N

    def point(tau):
        sched = cfg.schedule.build(tau=float(tau))
        r = _rate_value(spec, sched, method, N, cfg.tol)
        return (tau, r, r / rgr, method, sched.gamma, sched.theta)

    rows, trunc = run_points(point, _tau_values(cfg, args), cfg.threads)
    _emit(cfg, "rate", ("tau", "R", "R_over_RGR", "method", "gamma", "theta"), rows, trunc,
          golden_rule=golden_rule(spec), method=method, gamma=sched0.gamma)


def cmd_corr(cfg, args):
    b = BathState(cfg.spectrum.build(), cfg.temperature)
    sched = cfg.schedule.build()
    times = np.linspace(0.0, args.t_max, args.points)
    _, F, gb = effective_corr_series(b, sched, times, 0.0, args.branch, cfg.tol)
    rows = [(t, f, g.imag, abs(f)) for t, f, g in zip(times, F, gb)]
    _emit(cfg, "corr", ("t", "ReF", "ImgB", "AbsF"), rows, branch=args.branch)


def cmd_rateq(cfg, args):
    b = BathState(cfg.spectrum.build(), cfg.temperature)
    sched = cfg.schedule.build()
    sv = cfg.solver
    if sv.mode == "markov":
        rates = coarse_grained_rates(b, sched, rtol=cfg.tol)
        tr = solve_markov(rates, sv.P_e0, sv.t_final, args.points)
        rows = [(t, p, 1.0 - p, rates.R_e, rates.R_g) for t, p in zip(tr.times, tr.P_e)]
    else:
        tr = solve_volterra(b, sched, sv.P_e0, sv.t_final, sv.dt, mode=sv.mode, rtol=cfg.tol)
        rows = list(zip(tr.times, tr.P_e, tr.P_g, tr.meta["R_e_t"], tr.meta["R_g_t"]))
    _emit(cfg, "rateq", ("t", "P_e", "P_g", "R_e_t", "R_g_t"), rows,
          note="R_e_t, R_g_t: time-local rates averaged over the step ending at t"
          if sv.mode != "markov" else "coarse-grained rates")


def _steady_row(b, sched, pmp, N, tol):
    if pmp:
        rates = coarse_grained_rates_pmp(b, sched.tau, sched.theta, N, max(tol, 1e-8))
    else:
        rates = coarse_grained_rates(b, sched, rtol=tol)
    _, pe = steady_state(rates)
    return pe, rates.R_e, rates.R_g


def cmd_steady(cfg, args):
    b = BathState(cfg.spectrum.build(), cfg.temperature)
    N = cfg.solver.N

    def point(tau):
        sched = cfg.schedule.build(tau=float(tau))
        return (tau,) + _steady_row(b, sched, args.pmp, N, cfg.tol)

    rows, trunc = run_points(point, _tau_values(cfg, args), cfg.threads)
    _emit(cfg, "steady", ("tau", "P_e_st", "R_e_cg", "R_g_cg"), rows, trunc,
          pulses=bool(args.pmp))


# --- figures -----------------------------------------------------------------------

def _fig3(cfg, args):
    eta = np.linspace(-2.0 * math.pi, 2.0 * math.pi, args.points or 801)
    cols = ["eta"] + [f"h_{g:g}_{t:.6f}" for g, t in FIG3_PAIRS] + ["sinc2"]
    data = [eta] + [filter_h(g, t - eta) for g, t in FIG3_PAIRS] + [sinc2_half(eta)]
    return cols, list(zip(*data)), False


def _fig4(cfg, args):
    spec = cfg.spectrum.build()
    rgr = _rgr(spec)
    taus = np.geomspace(1e-6, 1e2, args.points or 200)
    jobs = [(th, g, tau) for th in FIG_THETAS for g in FIG_GAMMAS for tau in taus]

    def point(job):
        th, g, tau = job
        r = rate_measured(spec, tau, g, th, cfg.tol)
        return (th, g, tau, r, r / rgr)

    rows, trunc = run_points(point, jobs, cfg.threads)
    return ("theta", "gamma", "tau", "R", "R_over_RGR"), rows, trunc


def _fig5(cfg, args):
    b = BathState(cfg.spectrum.build(), cfg.temperature)
    times = np.linspace(0.0, 0.25, args.points or 501)
    gb = np.array([bath_corr(b, t, "plus", cfg.tol) for t in times])
    cols, data = ["t", "ReGB"], [times, gb.real]
    from .measurement import apparatus_correlation_array
    for tau in FIG5_TAUS:
        sched = MeasurementSchedule(tau, 0.0, 0.5, 0.0)
        ga = apparatus_correlation_array(times, np.zeros_like(times), sched)
        cols.append(f"F_tau{tau:g}")
        data.append(2.0 * (gb * ga).real)
    return cols, list(zip(*data)), False


def _fig6(cfg, args):
    b = BathState(cfg.spectrum.build(), cfg.temperature)
    sched = MeasurementSchedule(0.1, 0.0, 0.5, 0.0)
    times = np.linspace(0.0, 3.0, args.points or 601)
    rows = [(t,) + tuple(timelocal_rates(b, sched, t)) for t in times]
    return ("t", "R_e_t", "R_g_t"), rows, False


def _fig7(cfg, args):
    b = BathState(cfg.spectrum.build(), cfg.temperature)
    taus = np.geomspace(1e-5, 1e3, args.points or 81)
    jobs = [("measured", th, g, tau) for th in FIG_THETAS for g in FIG_GAMMAS for tau in taus]
    jobs += [("pmp", th, 1.0, tau) for th in FIG_THETAS[1:] for tau in taus]
    N = cfg.solver.N

    def point(job):
        kind, th, g, tau = job
        if kind == "pmp":
            sched = MeasurementSchedule(tau, 0.0, 1.0, th)
        else:
            sched = MeasurementSchedule(tau, 0.0, g, th)
        return (kind, th, g, tau) + _steady_row(b, sched, kind == "pmp", N, cfg.tol)

    rows, trunc = run_points(point, jobs, cfg.threads)
    return ("kind", "theta", "gamma", "tau", "P_e_st", "R_e_cg", "R_g_cg"), rows, trunc


FIGURES = {3: (_fig3, None), 4: (_fig4, "hydrogenic"), 5: (_fig5, "ohmic"),
           6: (_fig6, "ohmic"), 7: (_fig7, "hydrogenic")}


def cmd_fig(cfg, args):
    fn, kind = FIGURES[args.n]
    if kind is not None and not args.keep_spectrum:
        cfg = cfg.with_(spectrum=type(cfg.spectrum)(kind=kind))
    cols, rows, trunc = fn(cfg, args)
    _emit(cfg, f"fig {args.n}", cols, rows, trunc, figure=args.n)


# --- oracle ------------------------------------------------------------------------

def _oracle_report(cfg, doc):
    status = "PASS" if doc["pass"] else "FAIL"
    print(f"{status} {doc['check']}: {doc['summary']}", file=sys.stderr)
    text = json.dumps({"version": __version__, "config": cfg.to_dict(), **doc},
                      indent=1, sort_keys=True)
    if cfg.output.path:
        with open(cfg.output.path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_oracle_equivalence(cfg, args):
    from .oracle import (pointer_overlaps, random_density_matrix, random_hermitian,
                         random_unitary, repeated_evolution)
    rng = np.random.default_rng(cfg.seed)
    residuals = []
    for _ in range(args.trials):
        rho = random_density_matrix(args.dim, rng)
        u = random_unitary(args.dim, rng)
        hams = [random_hermitian(2, rng) for _ in range(args.dim)]
        psi = rng.normal(size=2) + 1j * rng.normal(size=2)
        psi /= np.linalg.norm(psi)
        tau_M = float(rng.uniform(0.1, 2.0))
        O = pointer_overlaps(hams, psi, tau_M)
        single = repeated_evolution(rho, u, O, args.n, "single")
        multi = repeated_evolution(rho, u, None, args.n, "multi", hamiltonians=hams,
                                   app_state=psi, tau_M=tau_M)
        residuals.append(float(np.max(np.abs(single - multi))))
    worst = max(residuals)
    _oracle_report(cfg, {"check": "equivalence", "n": args.n, "dim": args.dim,
                         "seed": cfg.seed, "tolerance": args.atol, "residuals": residuals,
                         "max_residual": worst, "pass": worst <= args.atol,
                         "summary": f"max |single - multi| = {worst:.3e}"})


def cmd_oracle_modesum(cfg, args):
    from .oracle import DiscreteBath, discrete_mode_sum
    spec = cfg.spectrum.build()
    sched = cfg.schedule.build()
    db = DiscreteBath.from_spectrum(spec, args.K)
    ref = discrete_mode_sum(db, sched, N=args.N, threads=cfg.threads)
    if sched.tau_M == 0 and sched.gamma < 1:
        cont = rate_measured(spec, sched.tau, sched.gamma, sched.theta, cfg.tol)
        label = "rate_measured"
    else:
        cont = rate_general(ShortTimeQuery(spec, sched, args.N), rtol=cfg.tol)
        label = "rate_general"
    rel = abs(ref - cont) / abs(cont) if cont else abs(ref)
    _oracle_report(cfg, {"check": "modesum", "K": args.K, "N": args.N,
                         "mode_sum": ref, label: cont, "relative_residual": rel,
                         "tolerance": args.rtol, "pass": rel <= args.rtol,
                         "summary": f"mode sum {ref:.6e} vs {label} {cont:.6e} (rel {rel:.2e})"})


# --- generic sweep -----------------------------------------------------------------

def cmd_sweep(cfg, args):
    q, var = cfg.sweep.quantity, cfg.sweep.variable
    if q not in SWEEP_PAIRS or var not in SWEEP_PAIRS[q]:
        pairs = "; ".join(f"{k}: {', '.join(v)}" for k, v in SWEEP_PAIRS.items())
        raise UsageError(f"cannot sweep {var!r} for quantity {q!r}; valid pairs are {pairs}")
    spec = cfg.spectrum.build()
    b = BathState(spec, cfg.temperature)
    N = cfg.solver.N

    def point(x):
        sched = cfg.schedule.build(**{var: float(x)})
        if q == "rate_projective":
            return (x, rate_projective(spec, sched.tau, cfg.tol))
        if q == "rate_measured":
            return (x, rate_measured(spec, sched.tau, sched.gamma, sched.theta, cfg.tol))
        if q == "rate_pmp":
            return (x, rate_pmp(spec, sched.tau, sched.theta, N, max(cfg.tol, 1e-8)))
        if q == "coarse_grained_rates":
            r = coarse_grained_rates(b, sched, rtol=cfg.tol)
            return (x, r.R_e, r.R_g)
        return (x,) + _steady_row(b, sched, False, N, cfg.tol)

    cols = {"coarse_grained_rates": (var, "R_e_cg", "R_g_cg"),
            "steady_state": (var, "P_e_st", "R_e_cg", "R_g_cg")}.get(q, (var, q))
    rows, trunc = run_points(point, cfg.sweep.values(), cfg.threads)
    _emit(cfg, "sweep", cols, rows, trunc, quantity=q)


# --- parser ----------------------------------------------------------------------

def _global_flags(parser, suppress):
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=d, help="YAML or JSON run configuration")
    parser.add_argument("--out", default=d, help="output file (default: stdout)")
    parser.add_argument("--format", choices=("csv", "json"), default=d)
    parser.add_argument("--threads", type=int, default=d)
    parser.add_argument("--seed", type=int, default=d)
    parser.add_argument("--tol", type=float, default=d, help="relative quadrature tolerance")
    parser.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS if suppress else 0)


def _physics_flags(p, schedule=True, bath=False, sweep=True):
    g = p.add_argument_group("model overrides")
    g.add_argument("--kind", choices=("hydrogenic", "ohmic", "tabulated"))
    g.add_argument("--omega-c", type=float)
    g.add_argument("--table", help="two-column omega,G CSV for --kind tabulated")
    if schedule:
        g.add_argument("--tau", type=float)
        g.add_argument("--tau-M", type=float)
        g.add_argument("--gamma", type=float)
        g.add_argument("--theta", type=float)
    if bath:
        g.add_argument("--temperature", type=float)
    if sweep:
        g.add_argument("--tau-min", type=float)
        g.add_argument("--tau-max", type=float)
        g.add_argument("--n-points", type=int)
        g.add_argument("--N", type=int, help="number of periods/pulses")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qzeno", description="Zeno and anti-Zeno decay under repeated measurements.")
    parser.add_argument("--version", action="version", version=f"qzeno {__version__}")
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("spectrum", parents=[common], help="tabulate G(omega)")
    _physics_flags(p, schedule=False, sweep=False)
    p.add_argument("--points", type=int, default=401)
    p.add_argument("--omega-max", type=float)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("rate", parents=[common], help="short-time decay rate")
    _physics_flags(p)
    p.add_argument("--method", default="measured",
                   choices=("measured", "projective", "pmp", "comb", "general"))
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("corr", parents=[common], help="dressed correlation F+(t, 0)")
    _physics_flags(p, bath=True, sweep=False)
    p.add_argument("--t-max", type=float, default=0.25)
    p.add_argument("--points", type=int, default=501)
    p.add_argument("--branch", choices=("plus", "minus"), default="plus")
    p.set_defaults(func=cmd_corr)

    p = sub.add_parser("rateq", parents=[common], help="population dynamics")
    _physics_flags(p, bath=True, sweep=False)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-final", type=float)
    p.add_argument("--P-e0", type=float, dest="P_e0")
    p.add_argument("--mode", choices=("volterra", "timelocal", "markov"))
    p.add_argument("--points", type=int, default=201, help="output points (markov)")
    p.set_defaults(func=cmd_rateq)

    p = sub.add_parser("steady", parents=[common], help="steady-state populations")
    _physics_flags(p, bath=True)
    p.add_argument("--pmp", action="store_true", help="phase-modulation pulses")
    p.set_defaults(func=cmd_steady)

    p = sub.add_parser("fig", parents=[common], help="figure data (3-7)")
    p.add_argument("n", type=int, choices=sorted(FIGURES))
    p.add_argument("--points", type=int, help="grid size override")
    p.add_argument("--keep-spectrum", action="store_true",
                   help="use the configured spectrum instead of the figure's")
    p.add_argument("--N", type=int, help="pulses for the fig 7 overlay")
    p.set_defaults(func=cmd_fig)

    p = sub.add_parser("oracle", parents=[common], help="independent cross-checks")
    osub = p.add_subparsers(dest="check", required=True, metavar="check")
    q = osub.add_parser("equivalence", parents=[common])
    q.add_argument("--n", type=int, default=4, help="number of measurements")
    q.add_argument("--dim", type=int, default=2, help="system dimension")
    q.add_argument("--trials", type=int, default=10)
    q.add_argument("--atol", type=float, default=1e-12)
    q.set_defaults(func=cmd_oracle_equivalence)
    q = osub.add_parser("modesum", parents=[common])
    _physics_flags(q, sweep=False)
    q.add_argument("--K", type=int, default=20_000, help="number of bath modes")
    q.add_argument("--N", type=int, default=5_000, help="number of measurements")
    q.add_argument("--rtol", type=float, default=0.02)
    q.set_defaults(func=cmd_oracle_modesum)

    p = sub.add_parser("sweep", parents=[common], help="config-driven sweep")
    _physics_flags(p, bath=True)
    p.add_argument("--quantity", choices=sorted(SWEEP_PAIRS))
    p.add_argument("--variable", choices=SWEEP_VARIABLES)
    p.set_defaults(func=cmd_sweep)
    return parser


def resolve_config(args):
    cfg = load_config(getattr(args, "config", None))
    g = lambda name: getattr(args, name, None)
    kind = g("kind")
    over = {
        "output.path": g("out"), "output.format": g("format"), "threads": g("threads"),
        "seed": g("seed"), "tol": g("tol"),
        "spectrum.kind": kind, "spectrum.omega_c": g("omega_c"), "spectrum.table": g("table"),
        "schedule.tau": g("tau"), "schedule.tau_M": g("tau_M"), "schedule.gamma": g("gamma"),
        "schedule.theta": g("theta"), "temperature": g("temperature"),
        "sweep.min": g("tau_min"), "sweep.max": g("tau_max"), "sweep.points": g("n_points"),
        "sweep.quantity": g("quantity"), "sweep.variable": g("variable"),
        "solver.dt": g("dt"), "solver.t_final": g("t_final"), "solver.P_e0": g("P_e0"),
        "solver.mode": g("mode"), "solver.N": g("N") if args.command != "oracle" else None,
    }
    if kind is not None and kind != cfg.spectrum.kind and g("omega_c") is None:
        # switching the kind drops a cutoff that belonged to the old kind
        cfg = cfg.with_(spectrum=type(cfg.spectrum)(kind=kind, scale=cfg.spectrum.scale))
    return cfg.with_(**over)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(getattr(args, "verbose", 0) or 0, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        args.func(cfg, args)
    except (UsageError, ConfigurationError) as exc:
        parser.print_usage(sys.stderr)
        print(f"qzeno: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, DegenerateSpectrumError) as exc:
        print(f"qzeno: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"qzeno: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ResourceError, MemoryError) as exc:
        print(f"qzeno: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
