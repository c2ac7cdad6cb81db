"""Command line: ``mavelocity <command> [options]``.

Exit codes: 0 success, 1 failed self-check, 2 infeasible, 3 no convergence
(or an unusable solver answer), 4 configuration or usage error. Failures also
print one JSON object on stderr, e.g. ``{"error": "infeasible", ...}``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from . import conic
from .config import ProblemConfig, load_config
from .estimators import SCHEMES, make_estimator
from .exceptions import ConfigError, ConvergenceError, InfeasibleError, SolverError
from .experiments import (
    SWEEP_PARAMS,
    region_areas,
    sweep,
    validate,
    write_coefficients,
    write_profile,
    write_region,
    write_sweep,
)
from .sensing import SensingModel, monte_carlo_mse, snapshot_positions, write_mc_report
from .sos import RegionGrid, rasterize_feasible_region

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INFEASIBLE, EXIT_NONCONVERGENCE, EXIT_CONFIG = 0, 1, 2, 3, 4

_SOLVER_KEYS = {f.name: f.type for f in dataclasses.fields(conic.SolverOptions)}
_EXTRA_KEYS = {"n_search": int, "seed": int}


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file ('#' starts a comment)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry; may be repeated; wins over --config")
    common.add_argument("--out", default=".", help="output directory (created if missing)")
    common.add_argument("--force", action="store_true", help="overwrite existing output files")
    common.add_argument("--seed", type=int, default=None, help="random seed (default 0)")

    parser = argparse.ArgumentParser(prog="mavelocity", description="Energy-efficient velocity profiles for a movable antenna.")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("optimize", parents=[common], help="run the spectral optimiser")
    p = sub.add_parser("baseline", parents=[common], help="evaluate a reference profile")
    p.add_argument("--type", required=True, choices=[s for s in SCHEMES if s != "proposed"])
    p = sub.add_parser("sweep", parents=[common], help="fit all schemes over a parameter range")
    p.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    p.add_argument("--values", required=True, help="comma-separated positive values")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes")
    p = sub.add_parser("region", parents=[common], help="rasterise the N=2 feasible region")
    p.add_argument("--n1", type=int, default=201)
    p.add_argument("--n2", type=int, default=201)
    p.add_argument("--extent", type=float, default=None,
                   help="half-width of the square [-e, e]^2 (default V_max*sqrt(T))")
    p.add_argument("--method", choices=("interval", "pointwise"), default="interval")
    p = sub.add_parser("validate", parents=[common], help="run the oracle self-checks")
    p.add_argument("--crb", action="store_true", help="also run the Monte-Carlo CRB check")
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--snr-db", type=float, action="append", default=None)
    sub.add_parser("trace", parents=[common], help="run the optimiser and print its iteration trace")
    return parser


def _coerce(kind, key, raw):
    kind = {"int": int, "float": float}.get(kind, kind)
    try:
        value = float(raw)
        return int(value) if kind is int and value == int(value) else kind(value)
    except ValueError:
        raise ConfigError(f"cannot parse {key}={raw!r}") from None


def resolve(args):
    """Config, solver options and extra knobs from ``--config`` and ``--set``."""
    cfg, extras = load_config(args.config, args.set)
    solver, knobs = {}, {"seed": 0}
    for key, raw in extras.items():
        if key in _SOLVER_KEYS:
            solver[key] = _coerce(_SOLVER_KEYS[key], key, raw)
        elif key in _EXTRA_KEYS:
            knobs[key] = _coerce(_EXTRA_KEYS[key], key, raw)
        else:
            raise ConfigError(f"unknown config key {key!r}")
    if args.seed is not None:
        knobs["seed"] = args.seed
    return cfg, conic.SolverOptions(**solver), knobs


def _targets(out: Path, names, force: bool):
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / n for n in names]
    existing = [str(p) for p in paths if p.exists()]
    if existing and not force:
        raise UsageError(f"refusing to overwrite {', '.join(existing)} (use --force)")
    return paths


def _summary(est) -> str:
    return f"EE={est.ee_:.9g} variance={est.variance_:.9g} energy={est.energy_:.9g}"


def cmd_optimize(args, cfg, options, knobs):
    profile_csv, coef_csv, trace_csv = _targets(Path(args.out), ["profile.csv", "coefficients.csv", "trace.csv"], args.force)
    est = make_estimator("proposed", cfg, solver_options=options).fit()
    write_profile(est.profile_, profile_csv)
    write_coefficients(est.coef_, coef_csv)
    est.trace_.write_csv(trace_csv)
    print(_summary(est) + f" outer_iters={len(est.trace_)}")
    return EXIT_OK


def cmd_trace(args, cfg, options, knobs):
    (trace_csv,) = _targets(Path(args.out), ["trace.csv"], args.force)
    est = make_estimator("proposed", cfg, solver_options=options).fit()
    est.trace_.write_csv(trace_csv)
    sys.stdout.write(trace_csv.read_text())
    print(_summary(est))
    return EXIT_OK


def cmd_baseline(args, cfg, options, knobs):
    (profile_csv,) = _targets(Path(args.out), ["profile.csv"], args.force)
    extra = {"n_search": knobs["n_search"]} if args.type == "trapezoidal" and "n_search" in knobs else {}
    est = make_estimator(args.type, cfg, **extra).fit()
    write_profile(est.profile_, profile_csv)
    line = _summary(est)
    if args.type == "trapezoidal":
        line += f" t_ramp={est.t_ramp_:.9g}"
    print(line)
    return EXIT_OK


def cmd_sweep(args, cfg, options, knobs):
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse --values {args.values!r}") from None
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    (sweep_csv,) = _targets(Path(args.out), ["sweep.csv"], args.force)
    try:
        points = sweep(args.param, values, cfg, n_jobs=args.jobs)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    write_sweep(points, sweep_csv)
    for p in points:
        print(f"{p.param}={p.value:.9g} {p.scheme}: EE={p.ee:.9g} status={p.status}")
    return EXIT_OK


def cmd_region(args, cfg, options, knobs):
    (region_csv,) = _targets(Path(args.out), ["region.csv"], args.force)
    e = args.extent if args.extent is not None else cfg.V_max * cfg.T**0.5
    if not e > 0:
        raise UsageError("--extent must be positive")
    grid = RegionGrid(-e, e, -e, e, args.n1, args.n2)
    # the raster is a two-mode picture; only T and V_max carry over from the config
    region_cfg = ProblemConfig(N=2, T=cfg.T, V_max=cfg.V_max)
    raster = rasterize_feasible_region(grid, region_cfg, method=args.method, options=options)
    write_region(raster, region_csv)
    areas = region_areas(raster, grid)
    print(" ".join(f"area_{k}={v:.6g}" for k, v in areas.items()))
    return EXIT_OK


def cmd_validate(args, cfg, options, knobs):
    names = ["crb.csv"] if args.crb else []
    paths = _targets(Path(args.out), names, args.force) if names else []
    ok = True
    for r in validate(knobs["seed"]):
        ok &= r.passed
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail} ({r.seconds:.2f}s)")
    if args.crb:
        model = SensingModel()
        est = make_estimator("sinusoidal", cfg).fit()
        x = snapshot_positions(est.profile_, model.snapshots)
        results = [monte_carlo_mse(x, model, snr, args.trials, seed=knobs["seed"], T=cfg.T)
                   for snr in (args.snr_db or [20.0])]
        write_mc_report(results, paths[0])
        for r in results:
            passed = 1.0 <= r.ratio <= 3.0
            ok &= passed
            print(f"{'PASS' if passed else 'FAIL'} crb monte carlo at {r.snr_db:g} dB: mse/crb={r.ratio:.4f}")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


COMMANDS = {
    "optimize": cmd_optimize,
    "baseline": cmd_baseline,
    "sweep": cmd_sweep,
    "region": cmd_region,
    "validate": cmd_validate,
    "trace": cmd_trace,
}


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": message, "exit_code": code}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, options, knobs = resolve(args)
        return COMMANDS[args.command](args, cfg, options, knobs)
    except ConfigError as exc:
        return _fail("config", str(exc), EXIT_CONFIG)
    except UsageError as exc:
        return _fail("usage", str(exc), EXIT_CONFIG)
    except InfeasibleError as exc:
        return _fail("infeasible", str(exc), EXIT_INFEASIBLE)
    except ConvergenceError as exc:
        return _fail("nonconvergence", str(exc), EXIT_NONCONVERGENCE)
    except SolverError as exc:
        return _fail("solver", str(exc), EXIT_NONCONVERGENCE)


if __name__ == "__main__":
    sys.exit(main())
