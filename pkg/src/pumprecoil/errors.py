"""Exception types shared across the package."""

from __future__ import annotations

from dataclasses import dataclass


class PumpRecoilError(Exception):
    """Base class for all package errors."""


@dataclass(frozen=True)
class MissingKey:
    field: str

    def __str__(self) -> str:
        return f"missing required key '{self.field}'"


@dataclass(frozen=True)
class UnknownKey:
    field: str

    def __str__(self) -> str:
        return f"unknown key '{self.field}'"


@dataclass(frozen=True)
class OutOfRange:
    field: str
    value: object
    interval: str

    def __str__(self) -> str:
        return f"'{self.field}' = {self.value!r} outside admissible interval {self.interval}"


class ConfigError(PumpRecoilError):
    """Raised with the full list of violated constraints."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class DomainError(PumpRecoilError):
    """Argument outside the mathematical domain of an operation."""


class NotResonant(PumpRecoilError):
    """Resonant-only closed form requested with nonzero detuning."""


class EmptyGrid(PumpRecoilError):
    """A scan or optimization was given an empty grid."""


class RunawayTrajectory(PumpRecoilError):
    """Emission count exceeded the configured cap; branching ratio too small for the budget."""

    def __init__(self, trajectory_index: int, cap: int):
        self.trajectory_index = trajectory_index
        self.cap = cap
        super().__init__(
            f"trajectory {trajectory_index} exceeded {cap} emissions; "
            "lambda2 is too small for this emission budget"
        )


class InsufficientSamples(PumpRecoilError):
    """Too few samples for the requested estimator."""


class InvariantViolation(PumpRecoilError):
    """Input data violate a documented type invariant."""


class UnsuppliedMoment(PumpRecoilError):
    """The requested mapping needs a recoil moment with no closed form available."""

    def __init__(self, order):
        self.order = order
        super().__init__(
            f"recoil moment <alpha*^{order[0]} alpha^{order[1]}> has no closed form; "
            "supply an MC estimate for it instead"
        )
