"""Photon-counting statistics of the completed pump process.

The emission count is geometric: P_n = lambda2 * lambda1^(n-1) for n >= 1
and P_0 = 0, with mean 1/lambda2 and variance lambda1/lambda2^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# above this count the geometric power is evaluated in log space
_LOG_SPACE_THRESHOLD = 1000


@dataclass(frozen=True)
class PhotonStatistics:
    lambda2: float

    def __post_init__(self):
        if not 0.0 < self.lambda2 <= 1.0:
            raise DomainError(f"lambda2 = {self.lambda2} outside (0, 1]")

    @property
    def lambda1(self) -> float:
        return 1.0 - self.lambda2

    def pmf(self, n):
        """P_n for integer n >= 0; vectorized."""
        n_arr = np.asarray(n)
        if np.any(n_arr != np.floor(n_arr)) or np.any(n_arr < 0):
            raise DomainError("photon count must be a non-negative integer")
        n_arr = n_arr.astype(np.int64)
        lam1, lam2 = self.lambda1, self.lambda2
        if lam1 == 0.0:
            out = np.where(n_arr == 1, 1.0, 0.0)
        else:
            k = np.maximum(n_arr - 1, 0)
            small = n_arr <= _LOG_SPACE_THRESHOLD
            out = lam2 * lam1 ** np.where(small, k, 0)
            if np.any(~small):
                out = np.where(small, out, np.exp(math.log(lam2) + k * math.log(lam1)))
            out = np.where(n_arr == 0, 0.0, out)
        return float(out) if out.ndim == 0 else out

    def mean(self) -> float:
        return 1.0 / self.lambda2

    def variance(self) -> float:
        return self.lambda1 / self.lambda2**2
