"""Input validation helpers in the spirit of ``sklearn.utils.validation``."""

from __future__ import annotations

import numpy as np

from .exceptions import GridError


def check_time_grid(t, T: float | None = None, *, rtol: float = 1e-12) -> np.ndarray:
    """Return ``t`` as a float array after checking it spans ``[0, T]`` strictly increasing."""
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise GridError("time grid must be one-dimensional with at least two points")
    if not np.all(np.isfinite(t)):
        raise GridError("time grid contains non-finite values")
    if np.any(np.diff(t) <= 0):
        raise GridError("time grid must be strictly increasing")
    if t[0] != 0.0:
        raise GridError(f"time grid must start at 0, got {t[0]!r}")
    if T is not None and abs(t[-1] - T) > rtol * max(1.0, abs(T)):
        raise GridError(f"time grid must end at T={T!r}, got {t[-1]!r}")
    return t


def check_points_in_interval(t, T: float) -> np.ndarray:
    """Evaluation points for a spectral profile: any shape, values within ``[0, T]``."""
    t = np.asarray(t, dtype=float)
    tol = 1e-12 * max(1.0, T)
    if np.any(t < -tol) or np.any(t > T + tol):
        raise GridError(f"evaluation points must lie in [0, {T}]")
    return t


def check_coefficients(c, n: int | None = None) -> np.ndarray:
    """Coerce spectral coefficients to a finite 1-D float vector of length ``n``."""
    c = np.asarray(c, dtype=float)
    if c.ndim != 1:
        raise ValueError(f"coefficients must be a vector, got shape {c.shape}")
    if n is not None and c.size != n:
        raise ValueError(f"expected {n} coefficients, got {c.size}")
    if not np.all(np.isfinite(c)):
        raise ValueError("coefficients must be finite")
    return c


def uniform_grid(T: float, n: int) -> np.ndarray:
    """Uniform grid of ``n`` points with exact endpoints 0 and ``T``."""
    t = np.linspace(0.0, T, n)
    t[-1] = T
    return t
