"""Exception hierarchy shared by the library and the CLI."""


class ProfileError(Exception):
    """Base class for all errors raised by :mod:`mavelocity`."""


class ConfigError(ProfileError, ValueError):
    """Invalid physical or numerical configuration."""


class GridError(ProfileError, ValueError):
    """Time grid is not a strictly increasing grid over ``[0, T]``."""


class DegenerateProfileError(ProfileError, ArithmeticError):
    """Zero variance and zero energy: the efficiency ratio is undefined."""


class UnboundedEfficiencyError(ProfileError, ArithmeticError):
    """Positive variance at zero energy cost."""


class InfiniteCRBError(ProfileError, ArithmeticError):
    """Antenna positions have zero spread, so the bound is infinite."""


class InfeasibleError(ProfileError):
    """A constraint set admits no point.

    ``result`` optionally carries the solver diagnostics that led to the verdict.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class SolverError(ProfileError):
    """The conic solver stopped without a usable answer (iteration limit or numerics)."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class ConvergenceError(ProfileError):
    """The outer Dinkelbach loop did not converge; ``trace`` holds the iterations so far."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
