"""Reference motion profiles the optimised profile is compared against."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ProblemConfig
from .exceptions import InfeasibleError
from .functionals import SampledProfile, evaluate, standard_grid


def sinusoidal(cfg: ProblemConfig) -> SampledProfile:
    """Half-sine ``min(V_max, pi L / (2T)) sin(pi t / T)``: optimal without drag."""
    t = standard_grid(cfg)
    amp = min(cfg.V_max, np.pi * cfg.L / (2.0 * cfg.T))
    v = amp * np.sin(np.pi * t / cfg.T)
    v[0] = v[-1] = 0.0
    return SampledProfile(t, v)


def uniform(cfg: ProblemConfig) -> SampledProfile:
    """Constant ``min(V_max, L/T)``. Starts at full speed (``v(0) != 0``) by construction."""
    t = standard_grid(cfg)
    return SampledProfile(t, np.full_like(t, min(cfg.V_max, cfg.L / cfg.T)))


def _pulse(cfg: ProblemConfig, start: float, stop: float, height: float, jump: float = 1e-9) -> SampledProfile:
    """Rectangular pulse on the standard grid refined at its two edges.

    Each discontinuity is resolved by a cell of width ``jump * T`` so that the
    trapezoid rule integrates ``v``, ``v^2`` and ``v^3`` to ``O(jump)``.
    """
    t = standard_grid(cfg)
    width = jump * cfg.T
    t = t[(np.abs(t - start) > 2 * width) & (np.abs(t - stop) > 2 * width) | (t == 0.0) | (t == cfg.T)]
    edges = [e for e in (start, start + width, stop - width, stop) if 0.0 < e < cfg.T]
    t = np.union1d(t, edges)
    inside = (t >= start + width) & (t <= stop - width)
    # an edge at 0 or T is a sprint touching the boundary: keep full height there
    if start <= 0.0:
        inside |= t <= stop - width
    if stop >= cfg.T:
        inside |= t >= start + width
    return SampledProfile(t, np.where(inside, height, 0.0))


def binary(cfg: ProblemConfig) -> SampledProfile:
    """Dwell-sprint-dwell at ``v in {0, V_max}``.

    The antenna rests, sprints across the track for ``tau = min(T, L/V_max)``
    centred in the interval, then rests again. Among unidirectional on/off
    profiles with travel at most ``L`` this one maximises the spatial variance.
    """
    tau = min(cfg.T, cfg.L / cfg.V_max)
    start = 0.5 * (cfg.T - tau)
    return _pulse(cfg, start, start + tau, cfg.V_max)


def trapezoid_speed(cfg: ProblemConfig, t_ramp: float, t) -> np.ndarray:
    """Speed of the accelerate-cruise-decelerate profile with ramps of length ``t_ramp``."""
    if not 0.0 <= t_ramp <= cfg.T / 2.0:
        raise ValueError("t_ramp must lie in [0, T/2]")
    t = np.asarray(t, dtype=float)
    v_c = cfg.L / (cfg.T - t_ramp)
    if t_ramp == 0.0:
        return np.full_like(t, v_c)
    return v_c * np.clip(np.minimum(t, cfg.T - t) / t_ramp, 0.0, 1.0)


def trapezoid_profile(cfg: ProblemConfig, t_ramp: float, t=None) -> SampledProfile:
    """Trapezoid covering the full track, sampled on ``t`` (standard grid by default)."""
    t = standard_grid(cfg) if t is None else t
    return SampledProfile(t, trapezoid_speed(cfg, t_ramp, t))


@dataclass(frozen=True)
class TrapezoidSearch:
    t_ramp: np.ndarray
    ee: np.ndarray
    best_index: int

    @property
    def t_ramp_opt(self) -> float:
        return float(self.t_ramp[self.best_index])

    @property
    def ee_opt(self) -> float:
        return float(self.ee[self.best_index])


def trapezoid_search(cfg: ProblemConfig, n_search: int = 2000) -> TrapezoidSearch:
    """Grid search of the ramp length over the open interval ``(0, T/2)``.

    Candidates whose cruise speed ``L / (T - t_ramp)`` exceeds ``V_max`` are
    skipped; if none remain the configuration is infeasible.
    """
    t_r = np.linspace(0.0, cfg.T / 2.0, n_search + 2)[1:-1]
    ee = np.full(t_r.shape, -np.inf)
    grid = standard_grid(cfg)
    for i, tr in enumerate(t_r):
        if cfg.L / (cfg.T - tr) > cfg.V_max:
            continue
        ee[i] = evaluate(trapezoid_profile(cfg, tr, grid), cfg)[2]
    if not np.isfinite(ee).any():
        raise InfeasibleError("no ramp length keeps the cruise speed below V_max")
    return TrapezoidSearch(t_r, ee, int(np.argmax(ee)))


def trapezoidal(cfg: ProblemConfig, n_search: int = 2000):
    """Efficiency-optimal symmetric trapezoid; returns ``(profile, t_ramp)``."""
    found = trapezoid_search(cfg, n_search)
    return trapezoid_profile(cfg, found.t_ramp_opt), found.t_ramp_opt


BASELINES = ("sinusoidal", "uniform", "binary", "trapezoidal")


def baseline_profile(name: str, cfg: ProblemConfig) -> SampledProfile:
    if name == "sinusoidal":
        return sinusoidal(cfg)
    if name == "uniform":
        return uniform(cfg)
    if name == "binary":
        return binary(cfg)
    if name == "trapezoidal":
        return trapezoidal(cfg)[0]
    raise ValueError(f"unknown baseline {name!r}; choose from {BASELINES}")
