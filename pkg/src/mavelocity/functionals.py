"""Trajectory, variance and energy functionals evaluated by quadrature.

These are the reference ("oracle") evaluations: everything is computed on a
sampled velocity profile with the composite trapezoid rule, independently of
the spectral closed forms in :mod:`mavelocity.spectral`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import cumulative_simpson, cumulative_trapezoid, simpson, trapezoid

from .config import ProblemConfig
from .exceptions import DegenerateProfileError, UnboundedEfficiencyError
from .validation import check_time_grid, uniform_grid


@dataclass(frozen=True)
class SampledProfile:
    """Samples ``v`` of a signal on the grid ``t`` (``t[0] = 0``, ``t[-1] = T``).

    Used both for velocities (m/s) and, after integration, for positions (m).
    """

    t: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        t = check_time_grid(self.t)
        v = np.asarray(self.v, dtype=float)
        if v.shape != t.shape:
            raise ValueError(f"samples have shape {v.shape}, grid has {t.shape}")
        t.setflags(write=False)
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "v", v)

    @property
    def T(self) -> float:
        return float(self.t[-1])

    @classmethod
    def from_function(cls, func, T: float, n: int = 4001) -> "SampledProfile":
        t = uniform_grid(T, n)
        return cls(t, np.broadcast_to(func(t), t.shape))


QUADRATURE_METHODS = ("trapezoid", "simpson")


def _check_method(method: str):
    if method not in QUADRATURE_METHODS:
        raise ValueError(f"method must be one of {QUADRATURE_METHODS}, got {method!r}")


def integrate_trajectory(profile: SampledProfile, method: str = "trapezoid") -> SampledProfile:
    """Positions ``x(t) = ∫_0^t v`` starting at ``x(0) = 0``.

    ``method="trapezoid"`` (default) is the cumulative trapezoid rule and is
    exact for piecewise-linear ``v``, including the edge cells of pulses.
    ``method="simpson"`` is fourth order for smooth ``v``.
    """
    _check_method(method)
    if method == "simpson":
        x = cumulative_simpson(profile.v, x=profile.t, initial=0.0)
    else:
        x = cumulative_trapezoid(profile.v, profile.t, initial=0.0)
    return SampledProfile(profile.t, x)


def _integral(y, t, method):
    return simpson(y, x=t) if method == "simpson" else trapezoid(y, t)


def variance_direct(positions: SampledProfile, method: str = "trapezoid") -> float:
    """Time-averaged spatial variance ``mean(x^2) - mean(x)^2`` of a trajectory."""
    _check_method(method)
    t, x = positions.t, positions.v
    T = positions.T
    mean = _integral(x, t, method) / T
    # centring before squaring avoids cancellation for large offsets
    return max(float(_integral((x - mean) ** 2, t, method) / T), 0.0)


def bridge_kernel(u, s, T: float):
    """Brownian-bridge kernel ``(T min(u, s) - u s) / T^2``; broadcasts."""
    u = np.asarray(u, dtype=float)
    s = np.asarray(s, dtype=float)
    return (T * np.minimum(u, s) - u * s) / T**2


def _trapezoid_weights(t: np.ndarray) -> np.ndarray:
    dt = np.diff(t)
    w = np.zeros_like(t)
    w[:-1] += dt / 2
    w[1:] += dt / 2
    return w


@lru_cache(maxsize=2)
def _weighted_kernel(key: bytes, n: int) -> np.ndarray:
    t = np.frombuffer(key, dtype=float, count=n)
    w = _trapezoid_weights(t)
    K = bridge_kernel(t[:, None], t[None, :], t[-1])
    K *= w[:, None]
    K *= w[None, :]
    K.setflags(write=False)
    return K


def variance_via_kernel(profile: SampledProfile, method: str = "trapezoid") -> float:
    """Variance as the double integral ``∬ v(u) K(u, s) v(s) du ds``.

    With ``method="trapezoid"`` the double integral is the tensorised
    trapezoid rule on the profile's own grid; the weighted kernel matrix is
    cached for the two most recent grids, so repeated calls on a shared grid
    cost one matrix-vector product.

    With ``method="simpson"`` the inner integral is split at the kink of
    ``K`` on the diagonal,

        ∫ K(u, s) v(s) ds = ((T - u) ∫_0^u s v ds + u ∫_u^T (T - s) v ds) / T^2,

    and both pieces and the outer integral use Simpson's rule, which keeps
    fourth-order accuracy for smooth ``v``.
    """
    _check_method(method)
    t, v = profile.t, profile.v
    if method == "trapezoid":
        K = _weighted_kernel(t.tobytes(), t.size)
        return float(v @ (K @ v))
    T = profile.T
    below = cumulative_simpson(t * v, x=t, initial=0.0)
    upto = cumulative_simpson((T - t) * v, x=t, initial=0.0)
    above = upto[-1] - upto
    inner = ((T - t) * below + t * above) / T**2
    return float(simpson(v * inner, x=t))


def energy(
    profile: SampledProfile,
    cfg: ProblemConfig,
    include_terminal_kinetic: bool | None = None,
) -> float:
    """Mechanical energy ``m_a v(T)^2 / 2 + ∫ (alpha1 v^2 + alpha2 v^3) dt``.

    ``include_terminal_kinetic`` defaults to ``cfg.include_terminal_kinetic``.
    """
    if include_terminal_kinetic is None:
        include_terminal_kinetic = cfg.include_terminal_kinetic
    v = profile.v
    dissipated = trapezoid(cfg.alpha1 * v**2 + cfg.alpha2 * v**3, profile.t)
    kinetic = 0.5 * cfg.m_a * v[-1] ** 2 if include_terminal_kinetic else 0.0
    return float(kinetic + dissipated)


def sensing_ee(variance: float, energy: float) -> float:
    """Sensing energy efficiency ``variance / energy`` (constant factors dropped)."""
    if energy > 0:
        return variance / energy
    if energy == 0:
        if variance > 0:
            raise UnboundedEfficiencyError("positive variance at zero energy")
        raise DegenerateProfileError("zero profile: variance and energy both vanish")
    raise ValueError(f"energy must be nonnegative, got {energy!r}")


def evaluate(profile: SampledProfile, cfg: ProblemConfig, include_terminal_kinetic=None):
    """Return ``(variance, energy, ee)`` of a velocity profile by quadrature."""
    var = variance_direct(integrate_trajectory(profile))
    en = energy(profile, cfg, include_terminal_kinetic)
    return var, en, sensing_ee(var, en)


def distance(profile: SampledProfile) -> float:
    """Total travelled distance ``∫ v dt``."""
    return float(trapezoid(profile.v, profile.t))


def standard_grid(cfg: ProblemConfig) -> np.ndarray:
    return uniform_grid(cfg.T, cfg.n_quad)
