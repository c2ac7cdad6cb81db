"""Scikit-learn style wrappers around the optimiser and the baselines.

Every estimator takes the :class:`~mavelocity.config.ProblemConfig` fields as
constructor parameters, so ``get_params``/``set_params``/``clone`` work as
usual and sweeps are a matter of ``clone(est).set_params(alpha2=...)``.
``fit`` ignores ``X`` and ``y`` (the problem carries no data); ``predict(t)``
returns velocities and ``score`` returns the sensing energy efficiency.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import baselines, conic
from .config import ProblemConfig
from .functionals import SampledProfile, evaluate, integrate_trajectory, standard_grid
from .optimizer import optimize
from .spectral import evaluate_profile
from .validation import check_points_in_interval


class _ProfileEstimator(BaseEstimator):
    """Shared parameter handling; subclasses implement ``_fit_profile``."""

    def __init__(self, T=1.0, L=4.0, V_max=10.0, m_a=0.1, alpha1=0.2, alpha2=0.1, eta=0.1, N=11,
                 eps_out=1e-6, eps_in=1e-6, max_outer=100, max_inner=50, n_quad=4001,
                 include_terminal_kinetic=True):
        self.T = T
        self.L = L
        self.V_max = V_max
        self.m_a = m_a
        self.alpha1 = alpha1
        self.alpha2 = alpha2
        self.eta = eta
        self.N = N
        self.eps_out = eps_out
        self.eps_in = eps_in
        self.max_outer = max_outer
        self.max_inner = max_inner
        self.n_quad = n_quad
        self.include_terminal_kinetic = include_terminal_kinetic

    @classmethod
    def from_config(cls, cfg: ProblemConfig, **kwargs):
        return cls(**cfg.to_dict(), **kwargs)

    def get_config(self) -> ProblemConfig:
        """Validated :class:`ProblemConfig` built from the current parameters."""
        names = ProblemConfig.__dataclass_fields__
        return ProblemConfig(**{k: v for k, v in self.get_params().items() if k in names})

    def fit(self, X=None, y=None):
        cfg = self.get_config()
        self.config_ = cfg
        self.profile_ = self._fit_profile(cfg)
        self.variance_, self.energy_, self.ee_ = evaluate(self.profile_, cfg)
        return self

    def _fit_profile(self, cfg: ProblemConfig) -> SampledProfile:
        raise NotImplementedError

    def predict(self, t):
        """Velocity at times ``t`` (linear interpolation of the fitted samples)."""
        check_is_fitted(self, "profile_")
        t = check_points_in_interval(t, self.config_.T)
        return np.interp(t, self.profile_.t, self.profile_.v)

    def trajectory(self, t=None):
        """Positions ``x(t)``; on the fitted grid when ``t`` is omitted."""
        check_is_fitted(self, "profile_")
        x = integrate_trajectory(self.profile_)
        if t is None:
            return x.v
        return np.interp(check_points_in_interval(t, self.config_.T), x.t, x.v)

    def score(self, X=None, y=None) -> float:
        """Sensing energy efficiency of the fitted profile."""
        check_is_fitted(self, "ee_")
        return float(self.ee_)


class VelocityProfileOptimizer(_ProfileEstimator):
    """Spectral Dinkelbach/SCA optimiser.

    Fitted attributes
    -----------------
    coef_ : ndarray of shape (N,)
        Sine-mode coefficients.
    trace_ : DinkelbachTrace
        Outer-iteration history.
    spectral_profile_ : SpectralProfile
        Continuous representation, used by :meth:`predict`.
    """

    def __init__(self, T=1.0, L=4.0, V_max=10.0, m_a=0.1, alpha1=0.2, alpha2=0.1, eta=0.1, N=11,
                 eps_out=1e-6, eps_in=1e-6, max_outer=100, max_inner=50, n_quad=4001,
                 include_terminal_kinetic=True, solver_options=None):
        super().__init__(T=T, L=L, V_max=V_max, m_a=m_a, alpha1=alpha1, alpha2=alpha2, eta=eta, N=N,
                         eps_out=eps_out, eps_in=eps_in, max_outer=max_outer, max_inner=max_inner,
                         n_quad=n_quad, include_terminal_kinetic=include_terminal_kinetic)
        self.solver_options = solver_options

    def _fit_profile(self, cfg):
        options = self.solver_options or conic.SolverOptions()
        prof, trace = optimize(cfg, options)
        self.spectral_profile_ = prof
        self.coef_ = np.array(prof.c)
        self.trace_ = trace
        return evaluate_profile(prof, standard_grid(cfg))

    def predict(self, t):
        check_is_fitted(self, "spectral_profile_")
        t = np.asarray(t, dtype=float)
        v = self.spectral_profile_(t)
        v[(t == 0.0) | (t == self.config_.T)] = 0.0
        return v


class SinusoidalBaseline(_ProfileEstimator):
    """Half-sine profile."""

    def _fit_profile(self, cfg):
        return baselines.sinusoidal(cfg)


class UniformBaseline(_ProfileEstimator):
    """Constant speed ``min(V_max, L/T)``."""

    def _fit_profile(self, cfg):
        return baselines.uniform(cfg)


class BinaryBaseline(_ProfileEstimator):
    """Dwell-sprint-dwell at full speed."""

    def _fit_profile(self, cfg):
        return baselines.binary(cfg)


class TrapezoidalBaseline(_ProfileEstimator):
    """Symmetric trapezoid with the ramp length chosen by grid search.

    Fitted attributes include ``t_ramp_`` and the full ``search_`` result.
    """

    def __init__(self, T=1.0, L=4.0, V_max=10.0, m_a=0.1, alpha1=0.2, alpha2=0.1, eta=0.1, N=11,
                 eps_out=1e-6, eps_in=1e-6, max_outer=100, max_inner=50, n_quad=4001,
                 include_terminal_kinetic=True, n_search=2000):
        super().__init__(T=T, L=L, V_max=V_max, m_a=m_a, alpha1=alpha1, alpha2=alpha2, eta=eta, N=N,
                         eps_out=eps_out, eps_in=eps_in, max_outer=max_outer, max_inner=max_inner,
                         n_quad=n_quad, include_terminal_kinetic=include_terminal_kinetic)
        self.n_search = n_search

    def _fit_profile(self, cfg):
        self.search_ = baselines.trapezoid_search(cfg, self.n_search)
        self.t_ramp_ = self.search_.t_ramp_opt
        return baselines.trapezoid_profile(cfg, self.t_ramp_)

    def predict(self, t):
        check_is_fitted(self, "t_ramp_")
        return baselines.trapezoid_speed(self.config_, self.t_ramp_, check_points_in_interval(t, self.config_.T))


SCHEMES = {
    "proposed": VelocityProfileOptimizer,
    "sinusoidal": SinusoidalBaseline,
    "uniform": UniformBaseline,
    "binary": BinaryBaseline,
    "trapezoidal": TrapezoidalBaseline,
}


def make_estimator(scheme: str, cfg: ProblemConfig | None = None, **kwargs) -> _ProfileEstimator:
    try:
        cls = SCHEMES[scheme]
    except KeyError:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {tuple(SCHEMES)}") from None
    return cls.from_config(cfg or ProblemConfig(), **kwargs)
