"""DoA signal model, Cramér-Rao bound and a Monte-Carlo check of it.

The received snapshots are ``y = alpha b(theta) s + n`` with steering vector
``b_m = exp(-j 2 pi x(t_m) theta / lambda)`` and circular Gaussian noise.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import InfiniteCRBError
from .functionals import integrate_trajectory


@dataclass(frozen=True)
class SensingModel:
    """Constants of the single-target DoA model.

    The defaults (``wavelength=0.1``, unit gain, pilot and noise powers,
    ``M=256`` snapshots) are arbitrary; only ratios such as MSE/CRB are
    meaningful under them.
    """

    theta: float = 0.3
    wavelength: float = 0.1
    gain: complex = 1.0
    pilot_power: float = 1.0
    noise_power: float = 1.0
    snapshots: int = 256

    def __post_init__(self):
        if not abs(self.theta) <= 1.0:
            raise ValueError("theta must lie in [-1, 1]")
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")
        if not self.noise_power > 0:
            raise ValueError("noise_power must be positive")
        if not self.pilot_power > 0:
            raise ValueError("pilot_power must be positive")
        if int(self.snapshots) != self.snapshots or self.snapshots < 2:
            raise ValueError("snapshots must be an integer >= 2")

    @property
    def snr(self) -> float:
        """Per-snapshot SNR ``|alpha|^2 P_s / sigma^2`` (linear)."""
        return abs(self.gain) ** 2 * self.pilot_power / self.noise_power

    def with_snr_db(self, snr_db: float) -> "SensingModel":
        """Copy whose noise power realises ``snr_db`` at the current gain and pilot power."""
        noise = abs(self.gain) ** 2 * self.pilot_power / 10.0 ** (snr_db / 10.0)
        return replace(self, noise_power=noise)


def steering_vector(positions, model: SensingModel, theta=None) -> np.ndarray:
    """``exp(-j 2 pi x theta / lambda)``; a vector ``theta`` gives shape ``(len(theta), M)``."""
    x = np.asarray(positions, dtype=float)
    th = model.theta if theta is None else np.asarray(theta, dtype=float)
    if np.any(np.abs(th) > 1.0):
        raise ValueError("theta must lie in [-1, 1]")
    return np.exp(-2j * np.pi * np.multiply.outer(th, x) / model.wavelength)


def sample_variance(positions) -> float:
    """Population variance ``mean((x - mean(x))^2)`` of the antenna positions."""
    x = np.asarray(positions, dtype=float)
    return float(np.mean((x - x.mean()) ** 2))


def crb(positions, model: SensingModel, T: float = 1.0) -> float:
    """Bound ``sigma^2 lambda^2 / (8 pi^2 T P_s M |alpha|^2 var(x))`` on the MSE of ``theta``.

    ``M`` is the number of positions supplied. Raises
    :class:`~mavelocity.exceptions.InfiniteCRBError` if they do not spread.
    """
    x = np.asarray(positions, dtype=float)
    var = sample_variance(x)
    if not var > 0.0 or np.ptp(x) == 0.0:
        raise InfiniteCRBError("positions have zero variance; the CRB is infinite")
    scale = 8.0 * np.pi**2 * T * model.pilot_power * x.size * abs(model.gain) ** 2
    return float(model.noise_power * model.wavelength**2 / (scale * var))


def simulate_received(positions, model: SensingModel, rng: np.random.Generator) -> np.ndarray:
    """One noisy snapshot vector (unit-modulus pilot of power ``P_s``)."""
    x = np.asarray(positions, dtype=float)
    s = np.sqrt(model.pilot_power)
    noise = np.sqrt(model.noise_power / 2.0) * (rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size))
    return model.gain * s * steering_vector(x, model) + noise


def _grid_peak(power: np.ndarray, grid: np.ndarray, refine: bool) -> np.ndarray:
    """Row-wise argmax over ``grid`` with optional parabolic refinement."""
    i = np.argmax(power, axis=-1)
    est = grid[i].astype(float)
    if not refine:
        return est
    step = grid[1] - grid[0]
    rows = np.arange(power.shape[0])
    inner = (i > 0) & (i < grid.size - 1)
    r, k = rows[inner], i[inner]
    left, mid, right = power[r, k - 1], power[r, k], power[r, k + 1]
    denom = left - 2.0 * mid + right
    concave = denom < 0.0
    offset = np.zeros_like(denom)
    offset[concave] = 0.5 * (left - right)[concave] / denom[concave]
    est[inner] += step * np.clip(offset, -0.5, 0.5)
    return np.clip(est, -1.0, 1.0)


def ml_grid_estimate(received, positions, model: SensingModel, n_grid: int = 4096, refine: bool = True):
    """Grid maximum of ``|b(theta)^H y|^2`` over ``[-1, 1]`` plus one parabolic step.

    ``received`` may be a single snapshot vector of length ``M`` or a stack of
    shape ``(trials, M)``; the estimate has the matching leading shape. With
    ``refine=False`` the raw grid maximiser is returned.
    """
    y = np.asarray(received)
    grid = np.linspace(-1.0, 1.0, n_grid)
    B = steering_vector(positions, model, grid).conj()
    power = np.abs(np.atleast_2d(y) @ B.T) ** 2
    est = _grid_peak(power, grid, refine)
    return float(est[0]) if y.ndim == 1 else est


@dataclass(frozen=True)
class MonteCarloResult:
    snr_db: float
    trials: int
    mse: float
    crb: float

    @property
    def ratio(self) -> float:
        return self.mse / self.crb


def _trial_errors(args):
    positions, model, seeds, n_grid = args
    Y = np.array([simulate_received(positions, model, np.random.default_rng(s)) for s in seeds])
    return ml_grid_estimate(Y.reshape(len(seeds), -1), positions, model, n_grid) - model.theta


def monte_carlo_mse(positions, model: SensingModel, snr_db: float, trials: int = 2000, seed: int = 0,
                    n_grid: int = 4096, T: float = 1.0, n_jobs: int = 1) -> MonteCarloResult:
    """Empirical MSE of :func:`ml_grid_estimate` next to the CRB.

    Every trial draws from its own child of ``SeedSequence(seed)``, so the
    result does not depend on ``n_jobs``.
    """
    model = model.with_snr_db(snr_db)
    positions = np.asarray(positions, dtype=float)
    seeds = np.random.SeedSequence(seed).spawn(trials)
    if n_jobs == 1:
        errors = _trial_errors((positions, model, seeds, n_grid))
    else:
        chunks = np.array_split(np.arange(trials), n_jobs)
        jobs = [(positions, model, [seeds[j] for j in c], n_grid) for c in chunks]
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            errors = np.concatenate(list(pool.map(_trial_errors, jobs)))
    return MonteCarloResult(float(snr_db), trials, float(np.mean(errors**2)), crb(positions, model, T))


def write_mc_report(results, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["snr_db", "trials", "mse", "crb", "ratio"])
        for r in results:
            w.writerow([f"{r.snr_db:.9g}", r.trials, f"{r.mse:.9g}", f"{r.crb:.9g}", f"{r.ratio:.9g}"])


def snapshot_times(T: float, M: int) -> np.ndarray:
    """Cell-centred sample times ``(m - 1/2) T / M``, ``m = 1..M``.

    With these times the sample variance of the positions is a midpoint-rule
    estimate of the continuous variance, so the two agree to ``O(M^-2)``.
    """
    return (np.arange(M) + 0.5) * (T / M)


def snapshot_positions(profile, M: int) -> np.ndarray:
    """Antenna positions at the ``M`` sample times of :func:`snapshot_times`."""
    t = snapshot_times(profile.T, M)
    return np.interp(t, profile.t, integrate_trajectory(profile).v)
