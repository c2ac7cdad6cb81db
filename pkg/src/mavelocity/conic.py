"""Small dense conic programs: a convex quadratic in ``c`` plus Gram-matrix blocks.

Every subproblem has the shape::

    minimize    1/2 c^T P c + q^T c          (or: maximize a PSD margin t)
    subject to  lhs_map c + lhs_offset = Σ_b coeffs(m_b(x) z(x)^T Q_b z(x))
                G c <= h,   A c = b
                Q_b ⪰ 0  (Q_b ⪰ t I in margin mode)

The polynomial matchings are passed as objects with ``lhs_map``,
``lhs_offset`` and ``blocks`` attributes (see :mod:`mavelocity.sos`). The
interior-point iterations are delegated to :mod:`cvxopt`; this module owns the
encoding, the verification of the returned point and the status decision.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from cvxopt import matrix, solvers

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
ITERATION_LIMIT = "iteration-limit"
NUMERICAL_FAILURE = "numerical-failure"


@dataclass(frozen=True)
class SolverOptions:
    """Tolerances of the interior-point solve and of the acceptance checks."""

    feastol: float = 1e-9
    abstol: float = 1e-10
    reltol: float = 1e-9
    max_iters: int = 100
    eq_tol: float = 1e-8
    psd_tol: float = 1e-8
    ineq_tol: float = 1e-8
    kkt_tol: float = 1e-6
    margin_cap: float = 1.0


@dataclass
class ConicSubproblem:
    """One convex subproblem over spectral coefficients and Gram blocks."""

    n: int
    P: np.ndarray | None = None
    q: np.ndarray | None = None
    matchings: Sequence = ()
    G: np.ndarray | None = None
    h: np.ndarray | None = None
    A: np.ndarray | None = None
    b: np.ndarray | None = None
    margin: bool = False

    def __post_init__(self):
        n = self.n
        if self.P is not None:
            self.P = np.asarray(self.P, dtype=float)
            if self.P.shape != (n, n):
                raise ValueError(f"P must be {n}x{n}")
        if self.q is not None:
            self.q = np.asarray(self.q, dtype=float).reshape(n)
        if (self.G is None) != (self.h is None):
            raise ValueError("G and h must be given together")
        if self.G is not None:
            self.G = np.atleast_2d(np.asarray(self.G, dtype=float))
            self.h = np.asarray(self.h, dtype=float).reshape(-1)
            if self.G.shape != (self.h.size, n):
                raise ValueError("G must have shape (len(h), n)")
        if (self.A is None) != (self.b is None):
            raise ValueError("A and b must be given together")
        if self.A is not None:
            self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
            self.b = np.asarray(self.b, dtype=float).reshape(-1)
            if self.A.shape != (self.b.size, n):
                raise ValueError("A must have shape (len(b), n)")
        for arr in (self.P, self.q, self.G, self.h, self.A, self.b):
            if arr is not None and not np.all(np.isfinite(arr)):
                raise ValueError("subproblem data must be finite")
        for m in self.matchings:
            if m.lhs_map.shape[1] != n:
                raise ValueError("matching does not act on the coefficient vector")

    @classmethod
    def gauss_newton(cls, J, f, c_ref, **kwargs) -> "ConicSubproblem":
        """Objective ``1/2 ||f + J (c - c_ref)||^2`` (constant term dropped)."""
        J = np.asarray(J, dtype=float)
        f = np.asarray(f, dtype=float)
        c_ref = np.asarray(c_ref, dtype=float)
        r0 = f - J @ c_ref
        return cls(n=J.shape[1], P=J.T @ J, q=J.T @ r0, **kwargs)

    def objective(self, c) -> float:
        val = 0.0
        if self.P is not None:
            val += 0.5 * c @ self.P @ c
        if self.q is not None:
            val += self.q @ c
        return float(val)


@dataclass
class SolveResult:
    status: str
    c: np.ndarray | None
    grams: list = field(default_factory=list)
    eq_residual: float = np.inf
    min_eig: float = -np.inf
    ineq_slack: float = np.inf
    kkt_residual: float = np.inf
    objective: float = np.nan
    margin: float = np.nan
    iterations: int = 0
    wall_time: float = 0.0
    solver_status: str = ""

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


def _block_operator(size: int, multiplier, n_coef: int) -> np.ndarray:
    """Matrix mapping the upper-triangular entries of ``Q`` to polynomial coefficients.

    Coefficient ``k`` of ``m(x) z^T Q z`` is ``Σ_s m_s Σ_{i+j=k-s} Q_ij``; the
    off-diagonal pair ``(i, j), (j, i)`` enters with weight 2.
    """
    iu, ju = np.triu_indices(size)
    op = np.zeros((n_coef, iu.size))
    weight = np.where(iu == ju, 1.0, 2.0)
    for s, ms in enumerate(multiplier):
        if ms == 0:
            continue
        deg = iu + ju + s
        keep = deg < n_coef
        np.add.at(op, (deg[keep], np.flatnonzero(keep)), ms * weight[keep])
    return op


def _sym_from_triu(vals: np.ndarray, size: int) -> np.ndarray:
    Q = np.zeros((size, size))
    iu, ju = np.triu_indices(size)
    Q[iu, ju] = vals
    Q[ju, iu] = vals
    return Q


class _Layout:
    """Variable ordering ``[c, Gram upper triangles..., (t)]`` and constraint blocks."""

    def __init__(self, sub: ConicSubproblem, margin_cap: float = 1.0):
        self.sub = sub
        self.margin_cap = margin_cap
        n = sub.n
        self.blocks = []  # (matching index, block, offset)
        off = n
        for mi, m in enumerate(sub.matchings):
            for blk in m.blocks:
                if blk.size == 0:
                    continue
                self.blocks.append((mi, blk, off))
                off += blk.size * (blk.size + 1) // 2
        self.t_index = off if sub.margin else None
        self.nvar = off + (1 if sub.margin else 0)

    def equalities(self):
        sub = self.sub
        rows, rhs = [], []
        for mi, m in enumerate(sub.matchings):
            n_coef = m.lhs_map.shape[0]
            R = np.zeros((n_coef, self.nvar))
            R[:, : sub.n] = m.lhs_map
            for bmi, blk, off in self.blocks:
                if bmi != mi:
                    continue
                width = blk.size * (blk.size + 1) // 2
                R[:, off : off + width] -= _block_operator(blk.size, blk.multiplier, n_coef)
            rows.append(R)
            rhs.append(-np.asarray(m.lhs_offset, dtype=float))
        if sub.A is not None:
            R = np.zeros((sub.A.shape[0], self.nvar))
            R[:, : sub.n] = sub.A
            rows.append(R)
            rhs.append(sub.b)
        if not rows:
            return None, None
        return np.vstack(rows), np.concatenate(rhs)

    def inequalities(self):
        """Linear rows then one PSD block per Gram matrix (column-major, full)."""
        sub = self.sub
        lin_rows, lin_rhs = [], []
        if sub.G is not None:
            R = np.zeros((sub.G.shape[0], self.nvar))
            R[:, : sub.n] = sub.G
            lin_rows.append(R)
            lin_rhs.append(sub.h)
        if sub.margin:
            R = np.zeros((1, self.nvar))
            R[0, self.t_index] = 1.0
            lin_rows.append(R)
            lin_rhs.append(np.array([self.margin_cap]))
        psd_rows, dims = [], []
        for _, blk, off in self.blocks:
            d = blk.size
            R = np.zeros((d * d, self.nvar))
            iu, ju = np.triu_indices(d)
            for idx, (i, j) in enumerate(zip(iu, ju)):
                R[i + j * d, off + idx] = -1.0
                R[j + i * d, off + idx] = -1.0
            if sub.margin:
                R[np.arange(d) * (d + 1), self.t_index] = 1.0
            psd_rows.append(R)
            dims.append(d)
        n_lin = sum(r.shape[0] for r in lin_rows)
        rows = lin_rows + psd_rows
        rhs = lin_rhs + [np.zeros(r.shape[0]) for r in psd_rows]
        if not rows:
            return None, None, {"l": 0, "q": [], "s": []}
        return np.vstack(rows), np.concatenate(rhs), {"l": n_lin, "q": [], "s": dims}

    def grams(self, x):
        out = [[] for _ in self.sub.matchings]
        for mi, blk, off in self.blocks:
            width = blk.size * (blk.size + 1) // 2
            out[mi].append(_sym_from_triu(x[off : off + width], blk.size))
        return out


def _verify(sub, layout, x, Aeq, beq, options):
    c = x[: sub.n]
    eq_res = 0.0
    if Aeq is not None:
        scale = max(1.0, float(np.abs(beq).max(initial=0.0)))
        eq_res = float(np.abs(Aeq @ x - beq).max()) / scale
    grams = layout.grams(x)
    eigs = [np.linalg.eigvalsh(Q).min() for per in grams for Q in per]
    min_eig = float(min(eigs)) if eigs else np.inf
    slack = np.inf
    if sub.G is not None:
        slack = float((sub.h - sub.G @ c).min())
    return c, grams, eq_res, min_eig, slack


_PROBE_BOX = 1e6


def _diagnose(sub: ConicSubproblem, options: SolverOptions) -> bool:
    """True when the constraints of ``sub`` admit no point (margin problem says so).

    Deciding the sign of the margin does not need tight tolerances, so an
    inconclusive probe is repeated with cvxopt's default ones.
    """
    # a loose box keeps the probe well posed when some coefficient is otherwise free
    box = np.vstack([np.eye(sub.n), -np.eye(sub.n)])
    G = box if sub.G is None else np.vstack([sub.G, box])
    h = np.full(2 * sub.n, _PROBE_BOX) if sub.h is None else np.concatenate([sub.h, np.full(2 * sub.n, _PROBE_BOX)])
    probe = ConicSubproblem(n=sub.n, matchings=sub.matchings, G=G, h=h, A=sub.A, b=sub.b, margin=True)
    relaxed = replace(options, feastol=1e-7, abstol=1e-7, reltol=1e-6, eq_tol=1e-6, ineq_tol=1e-6, psd_tol=1e-6)
    for opts in (options, relaxed):
        status = _solve(probe, opts).status
        if status in (INFEASIBLE, OPTIMAL):
            return status == INFEASIBLE
    return False


def solve(sub: ConicSubproblem, options: SolverOptions | None = None) -> SolveResult:
    """Solve a subproblem and classify the outcome.

    ``optimal`` is only reported when the returned point passes the equality,
    PSD and inequality checks of ``options`` and the KKT stationarity test.
    In margin mode ``optimal`` additionally requires the margin to be
    nonnegative within ``psd_tol``; a negative margin means ``infeasible``.
    A quadratic solve that fails is re-examined with the margin problem so
    that an empty feasible set is reported as ``infeasible`` rather than as a
    numerical failure.
    """
    options = options or SolverOptions()
    result = _solve(sub, options)
    if not sub.margin and result.status in (NUMERICAL_FAILURE, ITERATION_LIMIT):
        if _diagnose(sub, options):
            result.status = INFEASIBLE
    return result


def _solve(sub: ConicSubproblem, options: SolverOptions) -> SolveResult:
    start = time.perf_counter()
    layout = _Layout(sub, options.margin_cap)
    Aeq, beq = layout.equalities()
    Gin, hin, dims = layout.inequalities()
    nvar = layout.nvar

    P = np.zeros((nvar, nvar))
    qv = np.zeros(nvar)
    if sub.margin:
        qv[layout.t_index] = -1.0
    else:
        if sub.P is not None:
            P[: sub.n, : sub.n] = sub.P
        if sub.q is not None:
            qv[: sub.n] = sub.q
    obj_scale = max(float(np.abs(P).max()), float(np.abs(qv).max()))
    if obj_scale == 0.0:
        obj_scale = 1.0
    Ps, qs = P / obj_scale, qv / obj_scale

    opts = {
        "show_progress": False,
        "abstol": options.abstol,
        "reltol": options.reltol,
        "feastol": options.feastol,
        "maxiters": options.max_iters,
    }
    args = dict(
        G=matrix(Gin) if Gin is not None else None,
        h=matrix(hin) if hin is not None else None,
        dims=dims,
        A=matrix(Aeq) if Aeq is not None else None,
        b=matrix(beq) if beq is not None else None,
        options=opts,
    )
    try:
        if Ps.any():
            sol = solvers.coneqp(matrix(Ps), matrix(qs), **args)
        else:
            sol = solvers.conelp(matrix(qs), **args)
    except (ValueError, ArithmeticError) as exc:
        return SolveResult(
            status=NUMERICAL_FAILURE,
            c=None,
            wall_time=time.perf_counter() - start,
            solver_status=f"exception: {exc}",
        )

    raw_status = sol["status"]
    iters = int(sol.get("iterations", 0))
    elapsed = lambda: time.perf_counter() - start  # noqa: E731

    if raw_status == "primal infeasible":
        return SolveResult(INFEASIBLE, None, iterations=iters, wall_time=elapsed(), solver_status=raw_status)
    if sol["x"] is None:
        return SolveResult(NUMERICAL_FAILURE, None, iterations=iters, wall_time=elapsed(), solver_status=raw_status)

    x = np.array(sol["x"]).ravel()
    c, grams, eq_res, min_eig, slack = _verify(sub, layout, x, Aeq, beq, options)

    # stationarity of the scaled problem: P x + q + A^T y + G^T z = 0
    grad = Ps @ x + qs
    stat = grad.copy()
    if Aeq is not None and sol["y"] is not None:
        stat += Aeq.T @ np.array(sol["y"]).ravel()
    if Gin is not None and sol["z"] is not None:
        stat += Gin.T @ np.array(sol["z"]).ravel()
    kkt = float(np.linalg.norm(stat)) / (1.0 + float(np.linalg.norm(grad)))

    margin = float(x[layout.t_index]) if sub.margin else np.nan
    objective = sub.objective(c) if not sub.margin else margin

    feasible_point = (
        eq_res <= options.eq_tol
        and slack >= -options.ineq_tol
        and (min_eig >= -options.psd_tol or sub.margin)
    )
    converged = raw_status == "optimal" or kkt <= options.kkt_tol
    if feasible_point and converged and kkt <= options.kkt_tol:
        if sub.margin and margin < -options.psd_tol:
            status = INFEASIBLE
        else:
            status = OPTIMAL
    elif iters >= options.max_iters:
        status = ITERATION_LIMIT
    else:
        status = NUMERICAL_FAILURE
    return SolveResult(
        status=status,
        c=c,
        grams=grams,
        eq_residual=eq_res,
        min_eig=min_eig,
        ineq_slack=slack,
        kkt_residual=kkt,
        objective=objective,
        margin=margin,
        iterations=iters,
        wall_time=elapsed(),
        solver_status=raw_status,
    )
