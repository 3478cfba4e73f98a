"""Physical input parameters and their validation.

All quantities are dimensionless; times and rates are expressed in units of
the mean decay rate gamma = (gamma1 + gamma2)/2, which defaults to 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping

from .errors import ConfigError, MissingKey, OutOfRange, UnknownKey

REQUIRED_KEYS = ("lambda2", "eta1", "eta2", "nu_tilde", "saturation")

OPTIONAL_KEYS = {
    "detuning_scaled": 0.0,
    "dipole_theta1": math.pi / 2,
    "dipole_theta2": math.pi / 2,
    "gamma": 1.0,
}

ALL_KEYS = REQUIRED_KEYS + tuple(OPTIONAL_KEYS)

# field -> (lower, upper, lower_open, upper_open)
_BOUNDS = {
    "lambda2": (0.0, 1.0, True, False),
    "eta1": (0.0, math.inf, False, True),
    "eta2": (0.0, math.inf, False, True),
    "nu_tilde": (0.0, math.inf, True, True),
    "saturation": (0.0, math.inf, False, True),
    "detuning_scaled": (-math.inf, math.inf, True, True),
    "dipole_theta1": (0.0, math.pi, False, False),
    "dipole_theta2": (0.0, math.pi, False, False),
    "gamma": (0.0, math.inf, True, True),
}


@dataclass(frozen=True)
class PumpConfig:
    """Validated parameter set for one optical-pumping scenario.

    lambda2          branching ratio into the pumped state, in (0, 1]
    eta1, eta2       Lamb-Dicke parameters of the recycling / pumping transition
    nu_tilde         scaled trap frequency, 2*nu/gamma
    saturation       laser saturation S = |kappa|^2 / gamma^2
    detuning_scaled  laser detuning Delta/gamma (0 = resonant)
    dipole_theta1/2  angle between each transition dipole and the motional axis
    gamma            overall decay scale; 1 by convention
    """

    lambda2: float
    eta1: float
    eta2: float
    nu_tilde: float
    saturation: float
    detuning_scaled: float = 0.0
    dipole_theta1: float = math.pi / 2
    dipole_theta2: float = math.pi / 2
    gamma: float = 1.0

    @property
    def lambda1(self) -> float:
        """Branching ratio into the recycled state; never stored, so the pair always sums to 1."""
        return 1.0 - self.lambda2

    @property
    def nu(self) -> float:
        """Trap frequency in absolute units: nu = nu_tilde * gamma / 2."""
        return 0.5 * self.nu_tilde * self.gamma

    def to_dict(self) -> dict:
        return {k: float(getattr(self, k)) for k in ALL_KEYS}

    def replace(self, **changes) -> "PumpConfig":
        return validate({**self.to_dict(), **changes})


def _interval_str(field: str) -> str:
    lo, hi, lo_open, hi_open = _BOUNDS[field]
    left = "(" if lo_open else "["
    right = ")" if hi_open else "]"
    return f"{left}{lo}, {hi}{right}"


def _in_bounds(field: str, value: float) -> bool:
    lo, hi, lo_open, hi_open = _BOUNDS[field]
    if lo_open and not value > lo:
        return False
    if not lo_open and not value >= lo:
        return False
    if hi_open and not value < hi:
        return False
    if not hi_open and not value <= hi:
        return False
    return True


def validate(raw: Mapping) -> PumpConfig:
    """Build a PumpConfig from a raw mapping, collecting every violation.

    Raises ConfigError carrying MissingKey / UnknownKey / OutOfRange records
    for all problems at once, not just the first.
    """
    violations = []
    for key in raw:
        if key not in ALL_KEYS:
            violations.append(UnknownKey(key))
    values = {}
    for key in ALL_KEYS:
        if key in raw:
            value = raw[key]
        elif key in OPTIONAL_KEYS:
            value = OPTIONAL_KEYS[key]
        else:
            violations.append(MissingKey(key))
            continue
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            violations.append(OutOfRange(key, value, _interval_str(key)))
            continue
        value = float(value)
        if not math.isfinite(value) or not _in_bounds(key, value):
            violations.append(OutOfRange(key, value, _interval_str(key)))
            continue
        values[key] = value
    if violations:
        raise ConfigError(violations)
    return PumpConfig(**values)


def load_config(path) -> PumpConfig:
    """Read and validate a JSON configuration file."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ConfigError([OutOfRange("<root>", type(raw).__name__, "JSON object")])
    return validate(raw)


def save_config(cfg: PumpConfig, path) -> None:
    """Write the configuration as JSON; floats round-trip bit-exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
