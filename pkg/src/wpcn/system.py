"""Physical configuration of the network and the large-scale fading model."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "ConfigError",
    "SystemConfig",
    "default_config",
    "check",
    "validate",
    "path_loss",
    "load_config",
    "config_to_dict",
]


class ConfigError(ValueError):
    """Raised when a configuration violates one or more invariants.

    ``violations`` lists every failed invariant by name, not just the first.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class SystemConfig:
    """All physical constants and the network geometry, in SI units.

    Attributes
    ----------
    M : int
        Number of HAP antennas.
    K : int
        Number of wireless devices (WDs).
    B : float
        Total bandwidth [Hz].
    T : float
        Frame length [s].
    s_max : float
        Maximum DL power spectral density [W/Hz].
    P_b : float
        HAP power budget [W].
    sigma2_un : float
        UL noise variance [W].
    c0, d0, delta : float
        Path loss ``c0 * (d0 / d)**delta`` with reference distance ``d0`` [m].
    d : tuple of float
        WD distances [m], ascending.
    """

    M: int = 10
    K: int = 4
    B: float = 100e3
    T: float = 1e-3
    s_max: float = 1e-4
    P_b: float = 10.0
    sigma2_un: float = 1e-12
    c0: float = 1e-3
    d0: float = 1.0
    delta: float = 3.0
    d: tuple = field(default=(4.0, 6.0, 8.0, 10.0))

    def __post_init__(self):
        object.__setattr__(self, "d", tuple(float(v) for v in np.atleast_1d(self.d)))

    @property
    def distances(self) -> np.ndarray:
        return np.asarray(self.d, dtype=float)

    @property
    def beta_max(self) -> float:
        """Largest DL bandwidth ratio allowed by the power budget."""
        return min(1.0, self.P_b / (self.B * self.s_max))

    def replace(self, **changes) -> "SystemConfig":
        """Copy with some fields changed; ``K`` follows ``d`` if only ``d`` changes."""
        if "d" in changes and "K" not in changes:
            changes["K"] = len(np.atleast_1d(changes["d"]))
        return dataclasses.replace(self, **changes)


def default_config() -> SystemConfig:
    """Reference network: M=10, K=4, WDs at 4, 6, 8, 10 m."""
    return SystemConfig()


def check(config: SystemConfig) -> list[str]:
    """Return the names of every violated invariant (empty if valid)."""
    errs = []
    d = config.distances
    if int(config.M) != config.M or int(config.K) != config.K:
        errs.append("M and K must be integers")
    if config.K < 1:
        errs.append("K >= 1 violated")
    if config.M <= config.K:
        errs.append("M > K violated")
    if len(d) != config.K:
        errs.append(f"distance vector length {len(d)} != K={config.K}")
    if len(d) and not np.all(d > 0):
        errs.append("distances must be positive")
    if len(d) > 1 and np.any(np.diff(d) < 0):
        errs.append("distances not sorted")
    for name in ("T", "B", "s_max", "P_b", "sigma2_un", "c0", "d0", "delta"):
        val = getattr(config, name)
        if not (np.isfinite(val) and val > 0):
            errs.append(f"{name} > 0 violated")
    if config.P_b > config.B * config.s_max * (1 + 1e-12):
        errs.append("P_b <= B*s_max violated")
    return errs


def validate(config: SystemConfig) -> SystemConfig:
    """Return ``config`` unchanged if valid, else raise :class:`ConfigError`."""
    errs = check(config)
    if errs:
        raise ConfigError(errs)
    return config


def path_loss(config: SystemConfig) -> np.ndarray:
    """Large-scale fading vector ``b = c0 * d0**delta * d**(-delta)``."""
    return config.c0 * config.d0 ** config.delta * config.distances ** (-config.delta)


_FIELDS = {f.name for f in dataclasses.fields(SystemConfig)}


def load_config(source) -> SystemConfig:
    """Build a validated config from a JSON file path or a mapping.

    Missing keys take the reference defaults; unknown keys are an error.
    ``K`` defaults to ``len(d)`` when only ``d`` is given.
    """
    if isinstance(source, (str, Path)):
        try:
            data = json.loads(Path(source).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError([f"cannot read config {source}: {exc}"]) from exc
    else:
        data = dict(source)
    if not isinstance(data, dict):
        raise ConfigError(["config must be a JSON object"])
    unknown = sorted(set(data) - _FIELDS)
    if unknown:
        raise ConfigError([f"unknown config key(s): {', '.join(unknown)}"])
    if "d" in data and "K" not in data:
        data["K"] = len(data["d"])
    try:
        config = SystemConfig(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError([str(exc)]) from exc
    return validate(config)


def config_to_dict(config: SystemConfig) -> dict:
    out = dataclasses.asdict(config)
    out["d"] = list(config.d)
    return out
