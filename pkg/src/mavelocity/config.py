"""Problem configuration and the flat ``key=value`` config file format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping

from .exceptions import ConfigError


@dataclass(frozen=True)
class ProblemConfig:
    """Physical and numerical parameters of one velocity-profile problem.

    Defaults are the simulation setup used throughout the experiments:
    a 4 m track traversed within 1 s by a 0.1 kg antenna.

    Attributes
    ----------
    T : float
        Sensing interval in seconds.
    L : float
        Track length in metres.
    V_max : float
        Speed limit in m/s.
    m_a : float
        Antenna mass in kg.
    alpha1 : float
        Linear damping coefficient in kg/s.
    alpha2 : float
        Quadratic drag coefficient in kg/m.
    eta : float
        Fraction of ``L**2 / 4`` that the variance must reach (QoS floor).
    N : int
        Number of sine modes in the spectral expansion.
    eps_out, eps_in : float
        Stopping tolerances on ``|Δξ|`` (outer) and ``||Δc||`` (inner).
    max_outer, max_inner : int
        Iteration caps of the two loops.
    n_quad : int
        Number of points of the uniform quadrature grid.
    include_terminal_kinetic : bool
        Whether the energy functional keeps ``m_a v(T)^2 / 2``.
    """

    T: float = 1.0
    L: float = 4.0
    V_max: float = 10.0
    m_a: float = 0.1
    alpha1: float = 0.2
    alpha2: float = 0.1
    eta: float = 0.1
    N: int = 11
    eps_out: float = 1e-6
    eps_in: float = 1e-6
    max_outer: int = 100
    max_inner: int = 50
    n_quad: int = 4001
    include_terminal_kinetic: bool = True

    def __post_init__(self):
        checks = [
            (self.T > 0, "T must be positive"),
            (self.L > 0, "L must be positive"),
            (self.V_max > 0, "V_max must be positive"),
            (self.m_a >= 0, "m_a must be nonnegative"),
            (self.alpha1 >= 0, "alpha1 must be nonnegative"),
            (self.alpha2 >= 0, "alpha2 must be nonnegative"),
            (0 < self.eta <= 1, "eta must lie in (0, 1]"),
            (int(self.N) == self.N and self.N >= 1, "N must be a positive integer"),
            (self.eps_out > 0 and self.eps_in > 0, "tolerances must be positive"),
            (self.max_outer >= 1 and self.max_inner >= 1, "iteration caps must be >= 1"),
            (self.n_quad >= 3, "n_quad must be at least 3"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        object.__setattr__(self, "N", int(self.N))

    @property
    def qos_floor(self) -> float:
        """Minimum admissible variance ``eta * L**2 / 4``."""
        return self.eta * self.L**2 / 4.0

    def replace(self, **changes) -> "ProblemConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


_FIELD_TYPES = {f.name: f.type for f in fields(ProblemConfig)}


def _coerce(key: str, raw: str) -> Any:
    kind = _FIELD_TYPES[key]
    text = raw.strip()
    try:
        if kind in ("bool", bool):
            lowered = text.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind in ("int", int):
            value = float(text)
            if value != int(value):
                raise ValueError(text)
            return int(value)
        return float(text)
    except ValueError:
        raise ConfigError(f"cannot parse {key}={raw!r} as {kind}") from None


def parse_assignments(lines, *, allow_unknown: bool = False) -> dict[str, str]:
    """Parse ``key=value`` lines; ``#`` starts a comment, blank lines are skipped."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(lines, 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected key=value, got {line.strip()!r}")
        key, value = (s.strip() for s in body.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value
    return out


def config_from_mapping(values: Mapping[str, str], base: ProblemConfig | None = None):
    """Build a :class:`ProblemConfig` from string values.

    Returns ``(config, extras)`` where ``extras`` holds keys that are not
    config fields (solver or experiment knobs), left as strings.
    """
    kwargs = {}
    extras = {}
    for key, raw in values.items():
        if key in _FIELD_TYPES:
            kwargs[key] = _coerce(key, raw)
        else:
            extras[key] = raw
    base = base or ProblemConfig()
    return base.replace(**kwargs), extras


def load_config(path: str | Path | None, overrides=()) -> tuple[ProblemConfig, dict[str, str]]:
    """Read a config file (optional) and apply ``key=value`` overrides on top."""
    values: dict[str, str] = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        values.update(parse_assignments(text.splitlines()))
    values.update(parse_assignments(overrides))
    return config_from_mapping(values)


def dump_config(cfg: ProblemConfig) -> str:
    lines = [f"{k} = {v}" for k, v in cfg.to_dict().items()]
    return "\n".join(lines) + "\n"
