"""Projected dipole radiation characteristic.

The probability density of the emission direction cosine s along the
motional axis, for a transition dipole at angle theta to that axis, is

    mu(s) = 3/8 * [1 + cos^2(theta) + s^2 (1 - 3 cos^2(theta))],   s in [-1, 1].

It is normalized, even in s, and reduces to 3/8 (1 + s^2) for a
perpendicular dipole.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class DipoleCharacteristic:
    cos_theta: float

    def __post_init__(self):
        if not -1.0 <= self.cos_theta <= 1.0:
            raise DomainError(f"cos_theta = {self.cos_theta} outside [-1, 1]")

    @classmethod
    def from_angle(cls, theta: float) -> "DipoleCharacteristic":
        return cls(math.cos(theta))

    def _coeffs(self) -> tuple[float, float]:
        c2 = self.cos_theta * self.cos_theta
        return 0.375 * (1.0 + c2), 0.375 * (1.0 - 3.0 * c2)

    def density(self, s):
        """mu(s); raises DomainError for |s| > 1."""
        s = np.asarray(s, dtype=float)
        if np.any(np.abs(s) > 1.0):
            raise DomainError("projection s outside [-1, 1]")
        a, b = self._coeffs()
        out = a + b * s * s
        return float(out) if out.ndim == 0 else out

    def envelope(self) -> float:
        """max_s mu(s): attained at s = +-1 for near-perpendicular dipoles, at 0 otherwise."""
        a, b = self._coeffs()
        return a + b if b > 0.0 else a

    def moment(self, k: int) -> float:
        """<s^k> in closed form; odd moments vanish by the s -> -s symmetry."""
        if k < 0 or k != int(k):
            raise DomainError(f"moment order must be a non-negative integer, got {k}")
        k = int(k)
        if k % 2 == 1:
            return 0.0
        a, b = self._coeffs()
        # integral of (a + b s^2) s^k over [-1, 1]
        return 2.0 * (a / (k + 1) + b / (k + 3))

    def sample(self, rng, size=None, stats: dict | None = None):
        """Draw s with density mu via rejection against the uniform proposal on [-1, 1].

        Acceptance probability is 1/(2 max mu) >= 2/3 for a perpendicular
        dipole.  If `stats` is given, 'proposals' and 'accepted' counters
        are accumulated into it.
        """
        scalar = size is None
        n = 1 if scalar else int(size)
        a, b = self._coeffs()
        env = self.envelope()
        out = np.empty(n)
        need = np.arange(n)
        proposals = 0
        while need.size:
            cand = rng.uniform(-1.0, 1.0, need.size)
            accept = rng.random(need.size) * env <= a + b * cand * cand
            proposals += need.size
            out[need[accept]] = cand[accept]
            need = need[~accept]
        if stats is not None:
            stats["proposals"] = stats.get("proposals", 0) + proposals
            stats["accepted"] = stats.get("accepted", 0) + n
        return float(out[0]) if scalar else out
