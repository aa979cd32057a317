"""Command-line front end: synthesize -> certify -> simulate -> report.

Exit codes: 0 success/pass, 1 invalid input (parse error, shape mismatch,
Courant violation without override), 2 synthesis infeasible, 3 certificate
check failed or search infeasible, 4 simulation divergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .model import Certificate, load_system, validate_system
from .synthesis import (SynthesisInfeasible, load_observer, save_observer,
                        solve_scalar_m, verify_equations)
from .certificates import (check_hinf, check_stability, load_certificate,
                           save_certificate, search_certificate,
                           certificate_to_dict)
from .wavesim import (CFL_LIMIT, DivergenceError, simulate,
                      write_series_csv, write_snapshots_csv)
from .scenarios import BUILTIN_SCENARIOS, load_scenario
from .report import ReportError, print_summary, read_series, render_figures, summarize


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _load_system_checked(path):
    system = load_system(path)
    report = validate_system(system)
    if not report.ok:
        raise ValueError(f"invalid system {path}: "
                         + "; ".join(report.violations))
    return system


def cmd_synthesize(args) -> int:
    try:
        system = _load_system_checked(args.system)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        return _fail(str(exc), 1)
    try:
        sol = solve_scalar_m(system, args.alpha_scale)
    except SynthesisInfeasible as exc:
        print(f"infeasible: {exc} (null space dimension "
              f"{exc.nullspace_dim})", file=sys.stderr)
        return 2
    save_observer(sol.observer, args.out, alpha=sol.alpha,
                  residuals=sol.residuals)
    print(f"observer written to {args.out} (alpha = {sol.alpha:g}, "
          f"max residual = {sol.residuals.max_residual:.3e})")
    return 0


def _certify_check(args, system, observer) -> int:
    if args.certificate:
        cert = load_certificate(args.certificate)
    else:
        if args.p is None or args.g is None or args.delta is None:
            raise ValueError("check mode needs --certificate or all of "
                             "--p/--g/--delta (and optionally --mu)")
        eye = np.eye(system.n)
        cert = Certificate(args.p * eye, args.g * eye, args.delta, args.mu)
    if cert.mu is not None:
        stab = check_stability(system, observer, cert)
        hinf = check_hinf(system, observer, cert)
        merged = {**stab.as_dict(), **hinf.as_dict()}
        merged["overall"] = stab.overall and hinf.overall
    else:
        stab = check_stability(system, observer, cert)
        merged = stab.as_dict()
    with open(args.out, "w") as f:
        json.dump({**certificate_to_dict(cert), "report": merged}, f, indent=2)
        f.write("\n")
    verdict = "pass" if merged["overall"] else "fail"
    print(f"certificate check: {verdict} (report written to {args.out})")
    for key, val in merged.items():
        if key.endswith("_max_eig"):
            print(f"  {key} = {val:.6g}")
    print(f"  delta = {merged['delta']:g}, bound = {merged['delta_bound']:g}")
    return 0 if merged["overall"] else 3


def _certify_search(args, system, observer) -> int:
    for name in ("p_range", "g_range", "delta_range", "mu_range"):
        if getattr(args, name) is None:
            raise ValueError(f"search mode needs --{name.replace('_', '-')}")
    result = search_certificate(system, observer, args.p_range, args.g_range,
                                args.delta_range, args.mu_range,
                                grid_points=args.grid_points)
    save_certificate(result.certificate, args.out, report=result.report)
    if result.feasible:
        print(f"feasible certificate found (mu = {result.certificate.mu:g}, "
              f"{result.n_evaluated} points evaluated); written to {args.out}")
        return 0
    print(f"infeasible over the searched grid; least-violating point "
          f"written to {args.out}", file=sys.stderr)
    print(f"blocking condition: {result.blocking_condition}", file=sys.stderr)
    return 3


def cmd_certify(args) -> int:
    try:
        system = _load_system_checked(args.system)
        observer = load_observer(args.observer)
        if observer.n != system.n or observer.p != system.p \
                or observer.q != system.q:
            raise ValueError("system and observer dimensions disagree")
        if args.mode == "check":
            return _certify_check(args, system, observer)
        return _certify_search(args, system, observer)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        return _fail(str(exc), 1)


def cmd_simulate(args) -> int:
    t_start = time.perf_counter()
    os.makedirs(args.out, exist_ok=True)
    manifest_path = os.path.join(args.out, "manifest.json")
    manifest = {
        "command": "simulate",
        "version": __version__,
        "inputs": {"system": args.system, "observer": args.observer,
                   "scenario": args.scenario},
        "parameters": {"nx": args.nx, "dt": args.dt, "tfinal": args.tfinal,
                       "override_cfl": args.override_cfl},
        "outputs": [],
    }

    def finish(code, error=None):
        manifest["duration_s"] = time.perf_counter() - t_start
        if error is not None:
            manifest["error"] = error
        with open(manifest_path, "w") as f:
            json.dump(manifest, f, indent=2)
            f.write("\n")
        manifest["outputs"].append(manifest_path)
        return code

    try:
        system = _load_system_checked(args.system)
        observer = load_observer(args.observer)
        scenario = load_scenario(args.scenario, observer, nx=args.nx,
                                 dt=args.dt, tfinal=args.tfinal,
                                 override_cfl=args.override_cfl)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        finish(1, error=str(exc))
        return _fail(str(exc), 1)

    cert = scenario.certificate
    if args.certificate:
        try:
            cert = load_certificate(args.certificate)
        except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
            finish(1, error=str(exc))
            return _fail(str(exc), 1)

    grid = scenario.grid
    nu = grid.courant_number(system.A)
    manifest["parameters"].update(nx=grid.nx, dt=grid.dt, tfinal=grid.tfinal,
                                  courant_number=nu, scenario=scenario.name)
    if nu > CFL_LIMIT and not (grid.cfl_override or args.override_cfl):
        msg = (f"Courant number {nu:.3f} exceeds {CFL_LIMIT}; rerun with "
               f"--override-cfl to force")
        finish(1, error=msg)
        return _fail(msg, 1)

    try:
        result = simulate(system, observer, scenario.initial,
                          scenario.control, scenario.disturbance, grid,
                          cert=cert)
    except DivergenceError as exc:
        finish(4, error=str(exc))
        return _fail(f"divergence: {exc}", 4)
    except ValueError as exc:
        finish(1, error=str(exc))
        return _fail(str(exc), 1)

    series_path = os.path.join(args.out, "series.csv")
    snapshots_path = os.path.join(args.out, "snapshots.csv")
    write_series_csv(result, series_path)
    write_snapshots_csv(result, snapshots_path)
    manifest["outputs"] = [series_path, snapshots_path]
    if result.hinf_ratio is not None:
        manifest["hinf_ratio"] = result.hinf_ratio
    finish(0)
    print(f"simulated {scenario.name}: {grid.nsteps} steps, outputs in "
          f"{args.out}")
    if result.hinf_ratio is not None:
        print(f"hinf ratio: {result.hinf_ratio:.6g}")
    return 0


def cmd_report(args) -> int:
    try:
        series = read_series(args.series)
    except (OSError, ReportError, ValueError) as exc:
        return _fail(str(exc), 1)
    print_summary(summarize(series))
    if args.figures:
        out_dir = args.out or os.path.dirname(os.path.abspath(args.series))
        for path in render_figures(series, out_dir):
            print(f"figure written: {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="waveuio",
        description="Unknown-input observer synthesis, certification and "
                    "co-simulation for coupled semilinear wave systems.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synthesize", help="solve the observer equations "
                       "with M = alpha I")
    p.add_argument("system", help="system.json")
    p.add_argument("--alpha-scale", type=float, default=1.0,
                   help="normalization of the null-space solution "
                   "(default 1.0)")
    p.add_argument("--out", default="observer.json")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("certify", help="check or search stability / "
                       "attenuation certificates")
    p.add_argument("system")
    p.add_argument("observer")
    p.add_argument("--mode", choices=("check", "search"), default="check")
    p.add_argument("--certificate", help="certificate.json to check")
    p.add_argument("--p", type=float, help="scalar p in P = p I")
    p.add_argument("--g", type=float, help="scalar g in Gamma = g I")
    p.add_argument("--delta", type=float)
    p.add_argument("--mu", type=float, help="attenuation level")
    p.add_argument("--p-range", nargs=2, type=float, metavar=("LO", "HI"))
    p.add_argument("--g-range", nargs=2, type=float, metavar=("LO", "HI"))
    p.add_argument("--delta-range", nargs=2, type=float,
                   metavar=("LO", "HI"))
    p.add_argument("--mu-range", nargs=2, type=float, metavar=("LO", "HI"))
    p.add_argument("--grid-points", type=int, default=20)
    p.add_argument("--out", default="certificate.json")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("simulate", help="co-simulate plant and observer")
    p.add_argument("system")
    p.add_argument("observer")
    p.add_argument("scenario", help="scenario.json or a built-in name: "
                   + ", ".join(BUILTIN_SCENARIOS))
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--nx", type=int, help="override grid resolution")
    p.add_argument("--dt", type=float, help="override time step")
    p.add_argument("--tfinal", type=float, help="override final time")
    p.add_argument("--mu", type=float, help=argparse.SUPPRESS)
    p.add_argument("--certificate", help="certificate.json for energy "
                   "recording")
    p.add_argument("--override-cfl", action="store_true",
                   help="run despite a Courant number above the limit")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="summarize a series.csv and render "
                       "figures")
    p.add_argument("series", help="series.csv produced by simulate")
    p.add_argument("--out", help="figure directory (default: next to the "
                   "series file)")
    p.add_argument("--no-figures", dest="figures", action="store_false")
    p.set_defaults(func=cmd_report, figures=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
