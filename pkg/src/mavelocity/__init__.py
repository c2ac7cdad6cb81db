"""Energy-efficient velocity profiles for a movable antenna doing 1-D DoA sensing."""

from .baselines import BASELINES, baseline_profile, binary, sinusoidal, trapezoidal, uniform
from .config import ProblemConfig, load_config
from .estimators import (
    BinaryBaseline,
    SinusoidalBaseline,
    TrapezoidalBaseline,
    UniformBaseline,
    VelocityProfileOptimizer,
    make_estimator,
)
from .exceptions import (
    ConfigError,
    ConvergenceError,
    DegenerateProfileError,
    GridError,
    InfeasibleError,
    InfiniteCRBError,
    ProfileError,
    SolverError,
    UnboundedEfficiencyError,
)
from .functionals import (
    SampledProfile,
    energy,
    evaluate,
    integrate_trajectory,
    sensing_ee,
    variance_direct,
    variance_via_kernel,
)
from .optimizer import optimize
from .sensing import SensingModel, crb, ml_grid_estimate, steering_vector
from .spectral import SpectralBasis, SpectralProfile, build_basis

__version__ = "0.1.0"

__all__ = [
    "BASELINES",
    "BinaryBaseline",
    "ConfigError",
    "ConvergenceError",
    "DegenerateProfileError",
    "GridError",
    "InfeasibleError",
    "InfiniteCRBError",
    "ProblemConfig",
    "ProfileError",
    "SampledProfile",
    "SensingModel",
    "SinusoidalBaseline",
    "SolverError",
    "SpectralBasis",
    "SpectralProfile",
    "TrapezoidalBaseline",
    "UnboundedEfficiencyError",
    "UniformBaseline",
    "VelocityProfileOptimizer",
    "baseline_profile",
    "binary",
    "build_basis",
    "crb",
    "energy",
    "evaluate",
    "integrate_trajectory",
    "load_config",
    "make_estimator",
    "ml_grid_estimate",
    "optimize",
    "sensing_ee",
    "sinusoidal",
    "steering_vector",
    "trapezoidal",
    "uniform",
    "variance_direct",
    "variance_via_kernel",
]
