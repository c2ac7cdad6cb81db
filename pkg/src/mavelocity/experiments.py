"""Parameter sweeps, the feasible-region raster and the oracle self-check suite.

Everything here returns plain records and writes CSV; the command line in
:mod:`mavelocity.cli` is a thin layer over these functions.
"""

from __future__ import annotations

import csv
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import clone

from .baselines import binary, sinusoidal, trapezoidal, uniform
from .config import ProblemConfig
from .exceptions import ConvergenceError, InfeasibleError, ProfileError, SolverError
from .estimators import SCHEMES, make_estimator
from .functionals import (
    SampledProfile,
    bridge_kernel,
    evaluate,
    integrate_trajectory,
    standard_grid,
    variance_direct,
    variance_via_kernel,
)
from .sos import RegionGrid, certify_profile, rasterize_feasible_region
from .spectral import ResidualContext, SpectralProfile, build_basis, evaluate_profile, jacobian, residual

SWEEP_PARAMS = ("alpha2", "T", "L", "N")
SWEEP_HEADER = ["param", "value", "scheme", "variance", "energy", "ee", "status"]
REGION_HEADER = ["c1", "c2", "sos", "l1", "l2", "truth"]


def fmt(x: float, digits: int = 9) -> str:
    return f"{x:.{digits}g}"


def atomic_write_rows(path, header, rows):
    """Write a CSV next to ``path`` and move it into place in one step."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- sweeps -------------------------------------------------------------------


@dataclass(frozen=True)
class SweepPoint:
    param: str
    value: float
    scheme: str
    variance: float
    energy: float
    ee: float
    status: str

    def row(self):
        return [self.param, fmt(self.value), self.scheme, fmt(self.variance), fmt(self.energy), fmt(self.ee), self.status]


def status_of(exc: BaseException | None) -> str:
    if exc is None:
        return "ok"
    if isinstance(exc, InfeasibleError):
        return "infeasible"
    if isinstance(exc, ConvergenceError):
        return "nonconvergence"
    if isinstance(exc, SolverError):
        return "solver-error"
    return "error"


def _run_point(task):
    param, value, scheme, base = task
    est = clone(base[scheme]).set_params(**{param: int(value) if param == "N" else value})
    try:
        est.fit()
    except ProfileError as exc:
        return SweepPoint(param, value, scheme, np.nan, np.nan, np.nan, status_of(exc))
    return SweepPoint(param, value, scheme, est.variance_, est.energy_, est.ee_, "ok")


def sweep(param: str, values, cfg: ProblemConfig | None = None, schemes=tuple(SCHEMES), n_jobs: int = 1):
    """Fit every scheme at every value of ``param``; results in (value, scheme) order."""
    if param not in SWEEP_PARAMS:
        raise ValueError(f"sweep parameter must be one of {SWEEP_PARAMS}, got {param!r}")
    values = [float(v) for v in values]
    if not values or any(not v > 0 for v in values):
        raise ValueError("sweep values must be positive")
    if param == "N" and any(v != int(v) for v in values):
        raise ValueError("N values must be integers")
    cfg = cfg or ProblemConfig()
    base = {s: make_estimator(s, cfg) for s in schemes}
    tasks = [(param, v, s, base) for v in values for s in schemes]
    if n_jobs == 1:
        return [_run_point(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        # map yields in submission order, so the merge is deterministic
        return list(pool.map(_run_point, tasks))


def write_sweep(points, path):
    atomic_write_rows(path, SWEEP_HEADER, [p.row() for p in points])


# -- region -------------------------------------------------------------------


def write_region(raster, path):
    rows = [
        [fmt(r["c1"], 6), fmt(r["c2"], 6)] + [int(r[k]) for k in ("sos", "l1", "l2", "truth")]
        for r in raster
    ]
    atomic_write_rows(path, REGION_HEADER, rows)


def region_areas(raster, grid: RegionGrid) -> dict[str, float]:
    """Area of each set as ``count * cell area``."""
    cell = (grid.c1_max - grid.c1_min) / (grid.n1 - 1) * (grid.c2_max - grid.c2_min) / (grid.n2 - 1)
    return {k: float(raster[k].sum() * cell) for k in ("sos", "l1", "l2", "truth")}


# -- profile outputs -----------------------------------------------------------


def write_profile(profile: SampledProfile, path):
    x = integrate_trajectory(profile).v
    atomic_write_rows(path, ["t", "v", "x"], [[fmt(a), fmt(b), fmt(c)] for a, b, c in zip(profile.t, profile.v, x)])


def write_coefficients(c, path):
    atomic_write_rows(path, ["n", "c_n"], [[n, fmt(v)] for n, v in enumerate(c, 1)])


# -- oracle suite -------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _gauss_legendre(T: float, n: int = 400):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * T * (x + 1.0), 0.5 * T * w


def check_kernel_equivalence(rng, n_profiles: int = 20, max_N: int = 15, tol: float = 1e-6):
    """Direct and kernel variance of random smooth profiles, Simpson rule on both paths."""
    cfg = ProblemConfig()
    grid = standard_grid(cfg)
    worst = 0.0
    for _ in range(n_profiles):
        N = int(rng.integers(1, max_N + 1))
        prof = evaluate_profile(SpectralProfile(rng.uniform(-1.0, 1.0, N), build_basis(N, cfg.T)), grid)
        a = variance_direct(integrate_trajectory(prof, "simpson"), "simpson")
        b = variance_via_kernel(prof, "simpson")
        worst = max(worst, abs(a - b) / max(a, 1e-12))
    return worst <= tol, f"max relative gap {worst:.3g}"


def check_tensor(N: int = 12, T: float = 1.0, tol: float = 1e-10):
    basis = build_basis(N, T)
    t, w = _gauss_legendre(T)
    phi = basis.phi(t)
    quad = np.einsum("nq,mq,kq,q->nmk", phi, phi, phi, w)
    err = float(np.abs(quad - basis.tensor).max())
    return err <= tol, f"max deviation {err:.3g}"


def check_jacobian(rng, n_cases: int = 20, N: int = 11, tol: float = 1e-6):
    cfg = ProblemConfig(N=N)
    basis = build_basis(N, cfg.T)
    worst = 0.0
    h = 1e-6
    for _ in range(n_cases):
        c = rng.standard_normal(N)
        ctx = ResidualContext.from_config(rng.uniform(0.01, 1.0), basis, cfg)
        J = jacobian(c, ctx)
        fd = np.column_stack([(residual(c + h * e, ctx) - residual(c - h * e, ctx)) / (2 * h) for e in np.eye(N)])
        worst = max(worst, np.linalg.norm(J - fd) / np.linalg.norm(J))
    return worst <= tol, f"max relative error {worst:.3g}"


def check_mercer(N: int = 200, T: float = 1.0, n: int = 101, tol: float = 1e-3):
    basis = build_basis(N, T)
    t = np.linspace(0.0, T, n)
    phi = basis.phi(t)
    approx = np.einsum("n,nu,ns->us", basis.lam, phi, phi)
    exact = bridge_kernel(t[:, None], t[None, :], T)
    err = float(np.abs(approx - exact).max())
    return err <= tol * T, f"sup-norm error {err:.3g}"


def check_sos_soundness(rng, n_profiles: int = 5, tol: float = 1e-7):
    """Every certified profile must respect ``[0, V_max]`` on a dense sample."""
    cfg = ProblemConfig()
    basis = build_basis(cfg.N, cfg.T)
    t = np.linspace(0.0, cfg.T, 20001)
    n = np.arange(1, cfg.N + 1)
    candidates = []
    for _ in range(n_profiles):
        c = 0.05 * rng.standard_normal(cfg.N) / n
        c[0] = rng.uniform(0.5, 6.0)
        candidates.append(c)
    certified = 0
    for c in candidates:
        if not certify_profile(c, basis, cfg).ok:
            continue
        certified += 1
        v = c @ basis.phi(t)
        if v.min() < -tol or v.max() > cfg.V_max * (1 + tol):
            return False, f"certified profile spans [{v.min():.3g}, {v.max():.3g}]"
    return certified > 0, f"{certified}/{len(candidates)} certified, all within bounds"


def check_baselines():
    cfg = ProblemConfig()
    expected = {"sinusoidal": (sinusoidal, 0.13815, 1e-4), "uniform": (uniform, 0.12821, 1e-4),
                "binary": (binary, 0.0611, 1e-3)}
    msgs = []
    ok = True
    for name, (make, target, tol) in expected.items():
        ee = evaluate(make(cfg), cfg)[2]
        ok &= abs(ee - target) <= tol
        msgs.append(f"{name}={ee:.5f}")
    prof, _ = trapezoidal(cfg)
    ee = evaluate(prof, cfg)[2]
    ok &= abs(ee - 0.15) <= 0.01
    msgs.append(f"trapezoidal={ee:.5f}")
    return bool(ok), " ".join(msgs)


def validate(seed: int = 0):
    """Run every oracle check; yields :class:`CheckResult` as they finish."""
    rng = np.random.default_rng(seed)
    checks = [
        ("kernel-vs-direct variance", lambda: check_kernel_equivalence(rng)),
        ("tensor closed form", check_tensor),
        ("jacobian vs finite differences", lambda: check_jacobian(rng)),
        ("mercer reconstruction", check_mercer),
        ("sos certificate soundness", lambda: check_sos_soundness(rng)),
        ("baseline efficiencies", check_baselines),
    ]
    for name, fn in checks:
        start = time.perf_counter()
        try:
            passed, detail = fn()
        except Exception as exc:  # a crashing check is a failing check
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        yield CheckResult(name, bool(passed), detail, time.perf_counter() - start)
