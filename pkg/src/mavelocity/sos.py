"""Sum-of-squares encoding of the speed bounds ``0 <= v(t) <= V_max``.

With ``x = cos(pi t / T)`` the expansion becomes
``v = sqrt(2/T) sqrt(1 - x^2) P(x)`` where ``P = Σ c_n U_{n-1}`` is a
polynomial with monomial coefficients ``p = M c``. Nonnegativity of ``P`` on
``[-1, 1]`` is exact via the Markov-Lukács theorem. The upper bound uses
``sqrt(1 - x^2) <= 1 - x^2/2`` and asks that
``G(x) = sqrt(T/2) V_max - (1 - x^2/2) P(x)`` be nonnegative, with
coefficients ``g = F M c + b``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Sequence

import numpy as np

from . import conic
from .config import ProblemConfig
from .spectral import SpectralBasis
from .validation import check_coefficients, uniform_grid


@dataclass(frozen=True)
class ChebyshevMap:
    """Linear maps from spectral coefficients to polynomial coefficients.

    ``p = M @ c`` gives ``P`` (degree ``N - 1``) and ``g = F @ p + b`` gives
    ``G`` (degree ``N + 1``), both in the monomial basis on ``[-1, 1]``.
    """

    M: np.ndarray
    F: np.ndarray
    b: np.ndarray

    @property
    def N(self) -> int:
        return self.M.shape[0]

    def p(self, c) -> np.ndarray:
        return self.M @ np.asarray(c, dtype=float)

    def g(self, c) -> np.ndarray:
        return self.F @ (self.M @ np.asarray(c, dtype=float)) + self.b


def build_chebyshev_map(N: int, T: float, V_max: float) -> ChebyshevMap:
    M = np.zeros((N, N))
    for n in range(1, N + 1):
        for k in range(n):
            if (n - 1 - k) % 2:
                continue
            j = (n - 1 - k) // 2
            M[k, n - 1] = (-1) ** j * comb((n - 1 + k) // 2, j) * 2.0**k
    F = np.vstack([np.zeros((2, N)), 0.5 * np.eye(N)]) - np.vstack([np.eye(N), np.zeros((2, N))])
    b = np.zeros(N + 2)
    b[0] = np.sqrt(T / 2.0) * V_max
    for arr in (M, F, b):
        arr.setflags(write=False)
    return ChebyshevMap(M=M, F=F, b=b)


def gram_coefficient(Q, k: int) -> float:
    """Coefficient of ``x^k`` in ``z(x)^T Q z(x)`` with ``z = (1, x, ..., x^d)``.

    Diagonal entries count once and each off-diagonal pair twice, which is
    exactly the polynomial expansion. ``k < 0`` yields 0.
    """
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ValueError("Q must be square")
    if int(k) != k:
        raise ValueError("k must be an integer")
    k = int(k)
    if k < 0:
        return 0.0
    dim = Q.shape[0]
    if k > 2 * (dim - 1):
        raise ValueError(f"k={k} exceeds the degree {2 * (dim - 1)} of the quadratic form")
    i = np.arange(max(0, k - dim + 1), min(k, dim - 1) + 1)
    return float(Q[i, k - i].sum())


@dataclass(frozen=True)
class GramBlock:
    """An SOS term ``m(x) z_d(x)^T Q z_d(x)`` with ``Q`` of order ``size``."""

    name: str
    size: int
    multiplier: tuple  # monomial coefficients of m(x)


@dataclass(frozen=True)
class SosConstraintSet:
    """Coefficient matching ``lhs_map @ c + lhs_offset == Σ_b coeffs(m_b z^T Q_b z)``.

    ``branch`` is ``"even"`` (``s1 + (1 - x^2) s2``) or ``"odd"``
    (``(1 + x) s1 + (1 - x) s2``), chosen from the nominal ``degree``.
    """

    label: str
    degree: int
    branch: str
    blocks: tuple
    lhs_map: np.ndarray
    lhs_offset: np.ndarray

    def target(self, c) -> np.ndarray:
        return self.lhs_map @ np.asarray(c, dtype=float) + self.lhs_offset

    def reconstruct(self, grams: Sequence[np.ndarray]) -> np.ndarray:
        """Polynomial coefficients represented by a list of Gram matrices."""
        n_coef = self.lhs_map.shape[0]
        out = np.zeros(n_coef)
        active = [blk for blk in self.blocks if blk.size > 0]
        if len(grams) != len(active):
            raise ValueError(f"expected {len(active)} Gram matrices, got {len(grams)}")
        for blk, Q in zip(active, grams):
            for s, ms in enumerate(blk.multiplier):
                if ms == 0:
                    continue
                for k in range(s, min(n_coef, s + 2 * blk.size - 1)):
                    out[k] += ms * gram_coefficient(Q, k - s)
        return out


def lukacs_blocks(degree: int, names=("Q1", "Q2")) -> tuple[str, tuple]:
    """Gram blocks of the Markov-Lukács form for a polynomial of given degree."""
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    if degree % 2 == 0:
        d = degree // 2
        return "even", (
            GramBlock(names[0], d + 1, (1.0,)),
            GramBlock(names[1], d, (1.0, 0.0, -1.0)),
        )
    d = (degree - 1) // 2
    return "odd", (
        GramBlock(names[0], d + 1, (1.0, 1.0)),
        GramBlock(names[1], d + 1, (1.0, -1.0)),
    )


def assemble_lower_constraints(N: int, cmap: ChebyshevMap) -> SosConstraintSet:
    """Matching for ``P(x) >= 0`` on ``[-1, 1]`` with Gram blocks ``Q1, Q2``."""
    branch, blocks = lukacs_blocks(N - 1, ("Q1", "Q2"))
    return SosConstraintSet("lower", N - 1, branch, blocks, cmap.M, np.zeros(N))


def assemble_upper_constraints(N: int, cmap: ChebyshevMap, sign: float = 1.0) -> SosConstraintSet:
    """Matching for ``G(x) >= 0`` on ``[-1, 1]`` with Gram blocks ``Y1, Y2``.

    ``sign=-1`` encodes the mirrored bound ``-v <= V_max`` used for two-sided
    region plots.
    """
    branch, blocks = lukacs_blocks(N + 1, ("Y1", "Y2"))
    lhs = sign * (cmap.F @ cmap.M)
    return SosConstraintSet("upper" if sign > 0 else "upper-mirrored", N + 1, branch, blocks, lhs, cmap.b.copy())


@dataclass
class SosCertificate:
    """Gram matrices proving ``0 <= v(t) <= V_max`` for a fixed coefficient vector."""

    c: np.ndarray
    Q1: np.ndarray
    Q2: np.ndarray | None
    Y1: np.ndarray
    Y2: np.ndarray | None
    lower_branch: str
    upper_branch: str
    margin: float
    status: str = "certified"

    ok = True

    def matrices(self):
        return [m for m in (self.Q1, self.Q2, self.Y1, self.Y2) if m is not None]

    @property
    def min_eig(self) -> float:
        return min(float(np.linalg.eigvalsh(m).min()) for m in self.matrices())


@dataclass
class InfeasibilityReport:
    """Why a coefficient vector could not be certified."""

    status: str  # "infeasible" | "iteration-limit" | "numerical-failure"
    t_worst: float
    v_worst: float
    violation: float
    margin: float

    ok = False


def _split(grams, blocks):
    active = iter(grams)
    return [next(active) if blk.size > 0 else None for blk in blocks]


def _most_violated(c, basis: SpectralBasis, V_max: float, n: int = 4001):
    t = uniform_grid(basis.T, n)
    v = c @ basis.phi(t)
    viol = np.maximum(-v, v - V_max)
    i = int(np.argmax(viol))
    return float(t[i]), float(v[i]), float(viol[i])


def certify_profile(c, basis: SpectralBasis, cfg: ProblemConfig, options: conic.SolverOptions | None = None):
    """Search Gram matrices certifying ``0 <= v <= V_max`` for fixed ``c``.

    Solves the margin problem (largest ``t`` with every Gram block ``⪰ t I``).
    Returns a :class:`SosCertificate` when the margin is nonnegative within
    tolerance and the matrices reproduce ``M c`` and ``F M c + b``; otherwise
    an :class:`InfeasibilityReport` naming the most violated sampled instant.
    """
    options = options or conic.SolverOptions()
    c = check_coefficients(c, basis.N)
    cmap = build_chebyshev_map(basis.N, basis.T, cfg.V_max)
    lower = assemble_lower_constraints(basis.N, cmap)
    upper = assemble_upper_constraints(basis.N, cmap)
    sub = conic.ConicSubproblem(
        n=basis.N, matchings=(lower, upper), A=np.eye(basis.N), b=c, margin=True
    )
    res = conic.solve(sub, options)
    if res.status == conic.OPTIMAL:
        Q1, Q2 = _split(res.grams[0], lower.blocks)
        Y1, Y2 = _split(res.grams[1], upper.blocks)
        cert = SosCertificate(c, Q1, Q2, Y1, Y2, lower.branch, upper.branch, res.margin)
        rec_ok = np.allclose(lower.reconstruct(res.grams[0]), lower.target(c), rtol=0, atol=options.eq_tol * max(1.0, np.abs(lower.target(c)).max())) and np.allclose(
            upper.reconstruct(res.grams[1]), upper.target(c), rtol=0, atol=options.eq_tol * max(1.0, np.abs(upper.target(c)).max())
        )
        if rec_ok and cert.min_eig >= -options.psd_tol:
            return cert
        status = conic.NUMERICAL_FAILURE
    else:
        status = res.status
    t_w, v_w, viol = _most_violated(c, basis, cfg.V_max)
    return InfeasibilityReport(status, t_w, v_w, viol, res.margin)


def lower_feasible(c, basis: SpectralBasis, options: conic.SolverOptions | None = None) -> conic.SolveResult:
    """Margin solve for ``P(x) >= 0`` alone (no speed limit)."""
    c = check_coefficients(c, basis.N)
    cmap = build_chebyshev_map(basis.N, basis.T, 1.0)
    lower = assemble_lower_constraints(basis.N, cmap)
    sub = conic.ConicSubproblem(n=basis.N, matchings=(lower,), A=np.eye(basis.N), b=c, margin=True)
    return conic.solve(sub, options)


def norm_ball_memberships(c, cfg: ProblemConfig) -> dict[str, bool]:
    """Sufficient norm-ball conditions for ``|v| <= V_max``.

    ``l1``: ``||c||_1 <= sqrt(T/2) V_max``; ``l2``: ``||c||_2 <= sqrt(T/(2N)) V_max``.
    """
    c = check_coefficients(c)
    N = c.size
    return {
        "l1": bool(np.abs(c).sum() <= np.sqrt(cfg.T / 2.0) * cfg.V_max),
        "l2": bool(np.linalg.norm(c) <= np.sqrt(cfg.T / (2.0 * N)) * cfg.V_max),
    }


# -- two-dimensional feasible-region raster ----------------------------------


@dataclass(frozen=True)
class RegionGrid:
    """Square raster of ``(c1, c2)`` values."""

    c1_min: float = -1.0
    c1_max: float = 1.0
    c2_min: float = -1.0
    c2_max: float = 1.0
    n1: int = 201
    n2: int = 201

    def axes(self):
        return np.linspace(self.c1_min, self.c1_max, self.n1), np.linspace(self.c2_min, self.c2_max, self.n2)


def _two_sided_sets(cfg: ProblemConfig):
    cmap = build_chebyshev_map(2, cfg.T, cfg.V_max)
    return (assemble_upper_constraints(2, cmap, 1.0), assemble_upper_constraints(2, cmap, -1.0))


def two_sided_margin(c, cfg: ProblemConfig, options=None) -> conic.SolveResult:
    """Margin solve for ``|v| <= V_max`` through the relaxed bound applied to ``±v``."""
    sets = _two_sided_sets(cfg)
    n = len(c)
    sub = conic.ConicSubproblem(n=n, matchings=sets, A=np.eye(n), b=np.asarray(c, float), margin=True)
    return conic.solve(sub, options)


def _row_interval(c2: float, cfg: ProblemConfig, options):
    """Exact ``c1`` interval of the two-sided SOS set on the line ``c2 = const``.

    The set is the projection of a spectrahedron, hence convex, so its
    intersection with a line is an interval. Its endpoints are the optima of
    two linear programs over the SOS constraints.
    """
    sets = _two_sided_sets(cfg)
    fix = np.array([[0.0, 1.0]])
    ends = []
    for direction in (1.0, -1.0):
        sub = conic.ConicSubproblem(n=2, P=None, q=np.array([direction, 0.0]), matchings=sets, A=fix, b=[c2])
        res = conic.solve(sub, options)
        if res.status == conic.INFEASIBLE:
            return None
        if res.status != conic.OPTIMAL:
            raise RuntimeError(f"region endpoint solve failed at c2={c2}: {res.status}")
        ends.append(float(res.c[0]))
    return ends[0], ends[1]


def rasterize_feasible_region(grid: RegionGrid | None = None, cfg: ProblemConfig | None = None, *,
                              method: str = "interval", n_truth: int = 2001, options=None):
    """Membership of every ``(c1, c2)`` grid point in four sets for ``N = 2``.

    Returns a structured array with fields ``c1, c2, sos, l1, l2, truth``:

    * ``sos`` - two-sided relaxed SOS encoding; ``method="interval"`` solves
      two linear SDPs per row and uses convexity, ``method="pointwise"``
      solves one margin problem per point;
    * ``l1``, ``l2`` - norm-ball sufficient conditions;
    * ``truth`` - ``max_t |v(t)| <= V_max`` on ``n_truth`` samples.
    """
    grid = grid or RegionGrid()
    cfg = cfg or ProblemConfig(N=2, T=1.0, V_max=1.0)
    options = options or conic.SolverOptions()
    a1, a2 = grid.axes()
    C1, C2 = np.meshgrid(a1, a2, indexing="xy")
    c1f, c2f = C1.ravel(), C2.ravel()

    basis_t = uniform_grid(cfg.T, n_truth)
    s1 = np.sqrt(2.0 / cfg.T) * np.sin(np.pi * basis_t / cfg.T)
    s2 = np.sqrt(2.0 / cfg.T) * np.sin(2.0 * np.pi * basis_t / cfg.T)
    peak = np.abs(np.outer(c1f, s1) + np.outer(c2f, s2)).max(axis=1)
    truth = peak <= cfg.V_max

    l1 = np.abs(c1f) + np.abs(c2f) <= np.sqrt(cfg.T / 2.0) * cfg.V_max
    l2 = np.hypot(c1f, c2f) <= np.sqrt(cfg.T / 4.0) * cfg.V_max

    sos = np.zeros(c1f.size, dtype=bool)
    if method == "interval":
        tol = 1e-9
        for j, c2 in enumerate(a2):
            interval = _row_interval(float(c2), cfg, options)
            if interval is None:
                continue
            lo, hi = interval
            sos[j * a1.size : (j + 1) * a1.size] = (a1 >= lo - tol) & (a1 <= hi + tol)
    elif method == "pointwise":
        for i, (x, y) in enumerate(zip(c1f, c2f)):
            res = two_sided_margin([x, y], cfg, options)
            sos[i] = res.status == conic.OPTIMAL
    else:
        raise ValueError(f"unknown method {method!r}")

    out = np.zeros(c1f.size, dtype=[("c1", float), ("c2", float), ("sos", bool), ("l1", bool), ("l2", bool), ("truth", bool)])
    out["c1"], out["c2"] = c1f, c2f
    out["sos"], out["l1"], out["l2"], out["truth"] = sos, l1, l2, truth
    return out
