"""Sine-mode eigensystem of the bridge kernel and the Galerkin residual system.

The velocity is expanded as ``v(t) = sum_n c_n phi_n(t)`` with
``phi_n(t) = sqrt(2/T) sin(n pi t / T)``, the eigenfunctions of the
Brownian-bridge kernel with eigenvalues ``T / (n pi)^2``. In that basis the
variance is diagonal and the drag energy reduces to a triple-product tensor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import ProblemConfig
from .functionals import SampledProfile
from .validation import check_coefficients, check_points_in_interval


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Precomputed quantities for ``N`` sine modes on ``[0, T]``.

    Attributes
    ----------
    lam : ndarray, shape (N,)
        Kernel eigenvalues ``T / (n pi)^2``.
    tensor : ndarray, shape (N, N, N)
        ``tensor[n, m, k] = ∫ phi_n phi_m phi_k dt`` (0-based indices).
    beta : ndarray, shape (N,)
        ``beta[n] = ∫ phi_n dt``, so the travelled distance is ``beta @ c``.
    """

    N: int
    T: float
    lam: np.ndarray = field(repr=False)
    tensor: np.ndarray = field(repr=False)
    beta: np.ndarray = field(repr=False)

    @property
    def modes(self) -> np.ndarray:
        return np.arange(1, self.N + 1)

    def phi(self, t) -> np.ndarray:
        """Basis functions at ``t``; result has shape ``(N,) + t.shape``."""
        t = np.asarray(t, dtype=float)
        n = self.modes.reshape((-1,) + (1,) * t.ndim)
        return np.sqrt(2.0 / self.T) * np.sin(n * np.pi * t / self.T)


def triple_product_closed_form(N: int, T: float) -> np.ndarray:
    """Triple-product tensor via product-to-sum identities.

    Every term whose denominator vanishes has an even index combination, so
    its numerator ``1 - (-1)^d`` vanishes too; such terms are taken as 0.
    """
    n = np.arange(1, N + 1)
    a, b, k = np.meshgrid(n, n, n, indexing="ij")

    def term(d):
        odd = (d % 2) != 0
        out = np.zeros(d.shape)
        out[odd] = 2.0 / d[odd]
        return out

    total = term(a - b + k) + term(b - a + k) + term(a + b - k) - term(a + b + k)
    return total / (np.pi * np.sqrt(2.0 * T))


def build_basis(N: int, T: float) -> SpectralBasis:
    if N < 1 or int(N) != N:
        raise ValueError("N must be a positive integer")
    if T <= 0:
        raise ValueError("T must be positive")
    N = int(N)
    n = np.arange(1, N + 1)
    lam = T / (n * np.pi) ** 2
    beta = np.sqrt(2.0 * T) * (1.0 - (-1.0) ** n) / (n * np.pi)
    tensor = triple_product_closed_form(N, T)
    for arr in (lam, beta, tensor):
        arr.setflags(write=False)
    return SpectralBasis(N=N, T=float(T), lam=lam, tensor=tensor, beta=beta)


@dataclass(frozen=True, eq=False)
class SpectralProfile:
    """Velocity profile given by spectral coefficients ``c`` over ``basis``."""

    c: np.ndarray
    basis: SpectralBasis

    def __post_init__(self):
        c = check_coefficients(self.c, self.basis.N).copy()
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    def __call__(self, t) -> np.ndarray:
        t = check_points_in_interval(t, self.basis.T)
        return np.tensordot(self.c, self.basis.phi(t), axes=1)


def evaluate_profile(p: SpectralProfile, grid) -> SampledProfile:
    """Sample ``v_N`` on ``grid``; the endpoints are pinned to exactly zero."""
    t = np.asarray(grid, dtype=float)
    v = p(t)
    T = p.basis.T
    v[t == 0.0] = 0.0
    v[t == T] = 0.0
    return SampledProfile(t, v)


def spectral_variance(p: SpectralProfile) -> float:
    """Variance ``c^T Λ c``."""
    return float(p.c @ (p.basis.lam * p.c))


def cubic_form(c: np.ndarray, tensor: np.ndarray) -> float:
    return float(np.einsum("n,m,k,nmk->", c, c, c, tensor))


def spectral_energy(p: SpectralProfile, cfg: ProblemConfig) -> float:
    """Energy ``alpha1 ||c||^2 + alpha2 Σ c_n c_m c_k T_nmk``.

    There is no terminal kinetic term: every mode vanishes at ``t = T``.
    """
    c = p.c
    return float(cfg.alpha1 * (c @ c) + cfg.alpha2 * cubic_form(c, p.basis.tensor))


@dataclass(frozen=True, eq=False)
class ResidualContext:
    """Data of the Galerkin residual at a fixed Dinkelbach parameter ``xi``.

    ``A`` holds the diagonal of the linear part ``2 (Λ - xi alpha1 I)``.
    """

    xi: float
    basis: SpectralBasis
    alpha1: float
    alpha2: float
    A: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        A = 2.0 * (self.basis.lam - self.xi * self.alpha1)
        A.setflags(write=False)
        object.__setattr__(self, "A", A)

    @classmethod
    def from_config(cls, xi: float, basis: SpectralBasis, cfg: ProblemConfig):
        return cls(xi=float(xi), basis=basis, alpha1=cfg.alpha1, alpha2=cfg.alpha2)

    def with_xi(self, xi: float) -> "ResidualContext":
        return ResidualContext(float(xi), self.basis, self.alpha1, self.alpha2)


def mode_coupling(c: np.ndarray, tensor: np.ndarray) -> np.ndarray:
    """``q_k = c^T T_k c``."""
    return np.einsum("n,m,nmk->k", c, c, tensor)


def residual(c, ctx: ResidualContext) -> np.ndarray:
    """Galerkin residual ``f(c) = A c - 3 xi alpha2 q(c)``."""
    c = check_coefficients(c, ctx.basis.N)
    return ctx.A * c - 3.0 * ctx.xi * ctx.alpha2 * mode_coupling(c, ctx.basis.tensor)


def jacobian(c, ctx: ResidualContext) -> np.ndarray:
    """Analytic Jacobian ``diag(A) - 6 xi alpha2 K(c)`` with ``K_kj = Σ_n c_n T_njk``."""
    c = check_coefficients(c, ctx.basis.N)
    coupling = np.einsum("n,njk->kj", c, ctx.basis.tensor)
    return np.diag(ctx.A) - 6.0 * ctx.xi * ctx.alpha2 * coupling
