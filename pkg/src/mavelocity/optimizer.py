"""Two-layer optimisation of the spectral coefficients.

The outer loop is Dinkelbach's update ``xi <- V(v) / E(v)``. For fixed ``xi``
the inner loop performs successive convex approximation of

    minimize 1/2 ||f(c)||^2   subject to   SOS speed bounds, beta^T c <= L,
                                           c^T Λ c >= eta L^2 / 4

where ``f`` is the Galerkin residual. Each step linearises ``f`` (Gauss-Newton)
and replaces the variance floor with its tangent plane at the current point.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from . import conic
from .config import ProblemConfig
from .exceptions import ConvergenceError, InfeasibleError, SolverError
from .functionals import energy, integrate_trajectory, standard_grid, variance_direct
from .sos import ChebyshevMap, SosConstraintSet, assemble_lower_constraints, assemble_upper_constraints, build_chebyshev_map
from .spectral import (
    ResidualContext,
    SpectralBasis,
    SpectralProfile,
    build_basis,
    evaluate_profile,
    jacobian,
    residual,
    spectral_energy,
    spectral_variance,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConstraintMaps:
    cmap: ChebyshevMap
    lower: SosConstraintSet
    upper: SosConstraintSet

    @classmethod
    def build(cls, cfg: ProblemConfig) -> "ConstraintMaps":
        cmap = build_chebyshev_map(cfg.N, cfg.T, cfg.V_max)
        return cls(cmap, assemble_lower_constraints(cfg.N, cmap), assemble_upper_constraints(cfg.N, cmap))


@dataclass
class OuterRecord:
    iter: int
    xi_in: float
    xi: float
    variance: float
    energy: float
    inner_iters: int
    inner_step_norm: float
    statuses: tuple


@dataclass
class DinkelbachTrace:
    records: list = field(default_factory=list)
    xi0: float = np.nan

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def xi(self) -> np.ndarray:
        return np.array([r.xi for r in self.records])

    @property
    def final_ee(self) -> float:
        return self.records[-1].xi if self.records else np.nan

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iter", "xi", "variance", "energy", "inner_iters", "inner_step_norm"])
            for r in self.records:
                w.writerow([r.iter, f"{r.xi:.9g}", f"{r.variance:.9g}", f"{r.energy:.9g}", r.inner_iters, f"{r.inner_step_norm:.9g}"])


@dataclass
class InnerResult:
    c: np.ndarray
    iterations: int
    step_norm: float
    statuses: tuple
    last: conic.SolveResult | None = None


def initialize(cfg: ProblemConfig, basis: SpectralBasis | None = None):
    """Fundamental-mode start ``c1 = min(V_max, L/T) sqrt(T/2)`` and its efficiency."""
    basis = basis or build_basis(cfg.N, cfg.T)
    c0 = np.zeros(cfg.N)
    c0[0] = min(cfg.V_max, cfg.L / cfg.T) * np.sqrt(cfg.T / 2.0)
    p = SpectralProfile(c0, basis)
    xi0 = spectral_variance(p) / spectral_energy(p, cfg)
    return c0, xi0


def build_subproblem(ck, ctx: ResidualContext, cfg: ProblemConfig, maps: ConstraintMaps) -> conic.ConicSubproblem:
    """Gauss-Newton subproblem linearised at ``ck``."""
    lam = ctx.basis.lam
    G = np.vstack([ctx.basis.beta, -2.0 * lam * ck])
    h = np.array([cfg.L, -(cfg.qos_floor + ck @ (lam * ck))])
    return conic.ConicSubproblem.gauss_newton(
        jacobian(ck, ctx), residual(ck, ctx), ck, matchings=(maps.lower, maps.upper), G=G, h=h
    )


def _raise_for(res: conic.SolveResult, where: str):
    if res.status == conic.INFEASIBLE:
        raise InfeasibleError(f"{where}: subproblem infeasible", res)
    raise SolverError(f"{where}: subproblem solve ended with status {res.status}", res)


def sca_inner(c_start, xi: float, cfg: ProblemConfig, basis: SpectralBasis, maps: ConstraintMaps,
              options: conic.SolverOptions | None = None) -> InnerResult:
    """Successive convex approximation at fixed ``xi``.

    Stops once ``||c^k - c^{k-1}|| <= cfg.eps_in`` or after ``cfg.max_inner``
    subproblems; a non-optimal subproblem aborts with
    :class:`~mavelocity.exceptions.InfeasibleError` or
    :class:`~mavelocity.exceptions.SolverError`.
    """
    ctx = ResidualContext.from_config(xi, basis, cfg)
    ck = np.array(c_start, dtype=float)
    statuses = []
    step = np.inf
    res = None
    for k in range(1, cfg.max_inner + 1):
        res = conic.solve(build_subproblem(ck, ctx, cfg, maps), options)
        statuses.append(res.status)
        if not res.ok:
            _raise_for(res, f"inner iteration {k} (xi={xi:.6g})")
        step = float(np.linalg.norm(res.c - ck))
        ck = res.c
        if step <= cfg.eps_in:
            break
    return InnerResult(ck, k, step, tuple(statuses), res)


def quadrature_objectives(c, basis: SpectralBasis, cfg: ProblemConfig):
    """Variance and energy of the reconstructed profile on the standard grid."""
    prof = evaluate_profile(SpectralProfile(c, basis), standard_grid(cfg))
    return variance_direct(integrate_trajectory(prof)), energy(prof, cfg)


def optimize(cfg: ProblemConfig, options: conic.SolverOptions | None = None):
    """Run the Dinkelbach/SCA iteration; returns ``(SpectralProfile, DinkelbachTrace)``.

    The efficiency update uses quadrature of the reconstructed profile. Raises
    :class:`~mavelocity.exceptions.ConvergenceError` (carrying the trace) when
    ``|Δxi|`` is still above ``cfg.eps_out`` after ``cfg.max_outer`` passes.
    """
    basis = build_basis(cfg.N, cfg.T)
    maps = ConstraintMaps.build(cfg)
    c_hat, xi = initialize(cfg, basis)
    trace = DinkelbachTrace(xi0=xi)
    for i in range(cfg.max_outer):
        inner = sca_inner(c_hat, xi, cfg, basis, maps, options)
        c_hat = inner.c
        var, en = quadrature_objectives(c_hat, basis, cfg)
        xi_new = var / en
        trace.records.append(
            OuterRecord(i, xi, xi_new, var, en, inner.iterations, inner.step_norm, inner.statuses)
        )
        logger.debug("outer %d: xi %.9g -> %.9g (%d inner)", i, xi, xi_new, inner.iterations)
        if abs(xi_new - xi) <= cfg.eps_out:
            return SpectralProfile(c_hat, basis), trace
        xi = xi_new
    raise ConvergenceError(f"no convergence after {cfg.max_outer} outer iterations", trace)
