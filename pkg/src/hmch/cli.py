"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 numerical blow-up, 4 verdict FAIL.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .dynamics import BlowUpError, ConfigError, SimConfig, diagnostics, integrate
from .experiments import (PeakonSpec, nonuniform_experiment, peakon_error, peakon_profile,
                          residual_decay_rate)
from .operator import green_closed, green_series_on_grid, tail_bound
from .spectral import PeriodicField, lp_norm, to_spectrum

EXIT_OK, EXIT_INVALID, EXIT_BLOWUP, EXIT_FAIL = 0, 2, 3, 4

log = logging.getLogger("hmch")


def _outdir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"out: cannot create {out} ({exc.strerror})") from None
    return out


def _write_run(out: Path, traj, snapshots: bool) -> None:
    cfg = traj.config
    io.write_csv(out / "diagnostics.csv", io.diagnostics_header(cfg),
                 (io.diagnostics_row(r) for r in traj.diagnostics))
    if snapshots:
        for t, u in zip(traj.times, traj.fields):
            io.write_field(out / io.snapshot_name(t), u)
    if traj.fields:
        io.write_spectrum(out / "spectrum_final.csv", to_spectrum(traj.final))


def _run_and_write(cfg: SimConfig, u0: PeriodicField, out: Path, snapshots: bool):
    try:
        traj = integrate(u0, cfg)
    except BlowUpError as exc:
        if exc.trajectory is not None:
            _write_run(out, exc.trajectory, snapshots)
        if exc.state is not None:
            io.write_field(out / "last_valid.csv", exc.state)
        raise
    _write_run(out, traj, snapshots)
    return traj


def cmd_simulate(args) -> int:
    cfg, u0 = io.parse_config(args.config)
    out = _outdir(args.out)
    traj = _run_and_write(cfg, u0, out, not args.no_snapshots)
    print(f"{len(traj.times)} records to {out}")
    return EXIT_OK


def cmd_viscous(args) -> int:
    cfg, u0 = io.parse_config(args.config)
    changes = {}
    if args.epsilon is not None:
        changes["epsilon"] = args.epsilon
    if args.scheme is not None:
        changes["scheme"] = args.scheme
    cfg = dataclasses.replace(cfg, **changes) if changes else cfg
    if not cfg.epsilon > 0:
        raise ConfigError("epsilon: viscous runs need epsilon > 0")
    out = _outdir(args.out)
    traj = _run_and_write(cfg, u0, out, not args.no_snapshots)
    E0 = traj.diagnostics[0].E1
    rows = [(r.t, r.E1, r.dissipation_accum, (r.E1 + r.dissipation_accum - E0) / E0)
            for r in traj.diagnostics]
    io.write_csv(out / "ledger.csv", ("t", "E1", "dissipation", "ledger_rel_residual"), rows)
    worst = max(abs(r[3]) for r in rows)
    print(f"max relative ledger residual {worst:.3e}")
    return EXIT_OK


def cmd_peakon(args) -> int:
    spec = PeakonSpec(args.c)
    scheme = "IFRK4" if args.epsilon > 0 else "RK4"
    cfg = SimConfig(N=args.N, dt=args.dt, T=args.T, scheme=scheme, epsilon=args.epsilon,
                    dealias=not args.no_dealias, output_every=args.output_every,
                    cfl_override=args.cfl_override)
    u0 = peakon_profile(spec, 0.0, args.N)
    out = _outdir(args.out)
    traj = integrate(u0, cfg)
    errs = peakon_error(traj, spec)
    io.write_csv(out / "peakon.csv", ("t", "L2_error", "Linf_error"), errs)
    scale = lp_norm(u0, 2)
    worst = max(e[1] for e in errs) / scale
    ok = worst <= args.tol
    print(f"max relative L2 error {worst:.3e} (tol {args.tol:g}): {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_greens(args) -> int:
    if args.K < 1:
        raise ConfigError("K: must be a positive integer")
    if args.M < 1:
        raise ConfigError("M: must be a positive integer")
    out = _outdir(args.out)
    x = np.arange(args.M) / args.M
    closed = green_closed(x)
    series = green_series_on_grid(args.M, args.K)
    diff = np.abs(series - closed)
    io.write_csv(out / "greens.csv", ("x", "g_closed", "g_series_K", "abs_diff"),
                 zip(x, closed, series, diff))
    bound = tail_bound(args.K)
    ok = float(diff.max()) <= bound
    print(f"max abs_diff {diff.max():.3e} (tail bound {bound:.3e}): {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_residual(args) -> int:
    try:
        rep = residual_decay_rate(args.s, args.sigma, args.n, t=args.t, omega=args.omega)
    except ValueError as exc:
        raise ConfigError(f"n: {exc}" if "mode" in str(exc) else f"s: {exc}") from None
    out = _outdir(args.out)
    verdict = "PASS" if rep.passed else "FAIL"
    trailer = (f"# fitted_slope={io.fmt(rep.fitted_slope)} r_s={io.fmt(rep.r_s_expected)} "
               f"tolerance={io.fmt(rep.tolerance)} verdict={verdict}")
    io.write_csv(out / "residual.csv", ("n", "Hsigma_norm"), zip(rep.n_list, rep.norms), trailer)
    print(f"fitted slope {rep.fitted_slope:.4f}, expected {-rep.r_s_expected:g}: {verdict}")
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_nonuniform(args) -> int:
    cfg = SimConfig(N=args.N, dt=args.dt, T=args.T, output_every=args.output_every)
    try:
        rep = nonuniform_experiment(args.s, args.n, args.T, cfg, t_checks=args.t_checks,
                                    t_star=args.t_star, workers=args.workers)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"n: {exc}") from None
    out = _outdir(args.out)
    (out / "nonuniform.json").write_text(rep.to_json() + "\n", encoding="utf-8")
    print(f"kappa {rep.kappa:.6g}; verdict {rep.verdict}")
    for name, ok in rep.checks.items():
        print(f"  {name}: {'ok' if ok else 'FAILED'}")
    return EXIT_OK if rep.verdict == "PASS" else EXIT_FAIL


def cmd_diagnose(args) -> int:
    if args.config:
        cfg, u = io.parse_config(args.config)
    else:
        u = io.read_field(args.field)
        # no time stepping here, so the dt guard is irrelevant
        cfg = SimConfig(N=u.N, dt=1.0, T=0.0, cfl_override=True).with_initial(u)
    out = _outdir(args.out)
    rec = diagnostics(u, 0.0, cfg)
    io.write_csv(out / "diagnose.csv", io.diagnostics_header(cfg), [io.diagnostics_row(rec)])
    io.write_spectrum(out / "spectrum.csv", to_spectrum(u))
    print(f"mu={rec.mu:.17g} E1={rec.E1:.17g} sup_u={rec.sup_u:.6g} sup_ux={rec.sup_ux:.6g}")
    if rec.violations:
        print("bound violations: " + ", ".join(rec.violations))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hmch", description="Spectral solver and experiments for "
                                "the fourth-order mu-Camassa-Holm equation on the unit circle.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="integrate a config file and emit diagnostics")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--no-snapshots", action="store_true")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("viscous", help="viscous run plus the energy dissipation ledger")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--epsilon", type=float)
    s.add_argument("--scheme", choices=("RK4", "IFRK4"))
    s.add_argument("--no-snapshots", action="store_true")
    s.set_defaults(func=cmd_viscous)

    s = sub.add_parser("peakon", help="track a peakon against its exact translate")
    s.add_argument("--c", type=float, default=1.0)
    s.add_argument("--N", type=int, default=1024)
    s.add_argument("--dt", type=float, default=5e-5)
    s.add_argument("--T", type=float, default=0.1)
    s.add_argument("--epsilon", type=float, default=0.0)
    s.add_argument("--output-every", type=int, default=100)
    s.add_argument("--no-dealias", action="store_true")
    s.add_argument("--cfl-override", action="store_true")
    s.add_argument("--tol", type=float, default=1e-2, help="relative L2 tolerance")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_peakon)

    s = sub.add_parser("greens", help="closed-form Green's function vs its Fourier series")
    s.add_argument("--K", type=int, default=10000)
    s.add_argument("--M", type=int, default=1024, help="number of grid points")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_greens)

    s = sub.add_parser("residual", help="decay rate of the approximate-solution residual")
    s.add_argument("--s", type=float, default=4.0)
    s.add_argument("--sigma", type=float, default=2.0)
    s.add_argument("--n", type=int, nargs="+", default=[8, 16, 32, 64])
    s.add_argument("--t", type=float, default=0.0)
    s.add_argument("--omega", type=float, default=1.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_residual)

    s = sub.add_parser("nonuniform", help="two-family separation experiment")
    s.add_argument("--s", type=float, default=4.0)
    s.add_argument("--n", type=int, nargs="+", default=[16, 32])
    s.add_argument("--T", type=float, default=1.5)
    s.add_argument("--N", type=int, default=512)
    s.add_argument("--dt", type=float, default=1e-4)
    s.add_argument("--output-every", type=int, default=500)
    s.add_argument("--t-checks", type=float, nargs="+", default=[0.5, 1.0, 1.5])
    s.add_argument("--t-star", type=float, default=1.0)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_nonuniform)

    s = sub.add_parser("diagnose", help="diagnostics and spectrum of a single field")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--config")
    src.add_argument("--field", help="CSV with header x,u")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_diagnose)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except BlowUpError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(run())
