"""Waiting-time distribution between successive excitations under continuous drive.

The delay statistics follow from the decaying two-component amplitude
(psi1, psi3) of the effective non-Hermitian evolution

    d/dt psi1 = -i kappa/2 psi3 - i Delta psi1
    d/dt psi3 = -i kappa/2 psi1 - gamma psi3,        kappa = gamma sqrt(S),

with psi1(0) = 1.  The density is w(t) = 2 gamma |psi3(t)|^2.  Writing
lambda_+/- for the eigenvalues of that 2x2 system,

    w(t) = K [ exp(mu1 t) + exp(mu2 t) - 2 Re exp(mu3 t) ],
    mu1 = 2 Re lambda_+,  mu2 = 2 Re lambda_-,  mu3 = lambda_+ + conj(lambda_-),
    K   = gamma |kappa|^2 / (2 |lambda_+ - lambda_-|^2),

which covers arbitrary saturation and detuning with one code path.  The
resonant closed form (sinh^2 times a decaying exponential) and its Fourier
transform are kept as independent cross-checks.  CDF, its exact inverse,
and the spectral transform all come from the same exponent set.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from .config import PumpConfig
from .errors import DomainError

# eigenvalue splitting below which the confluent (critically damped) limit is used
DEGENERACY_THRESHOLD = 1e-6

# largest quantile represented in the tabulated inverse CDF
_TABLE_U_MAX = 1.0 - 2.0**-33


class WaitingTimeModel:
    """Closed-form waiting-time distribution for given saturation and detuning.

    Immutable after construction (the lazily built inverse table included);
    safe to share across threads.
    """

    def __init__(self, saturation: float, detuning_scaled: float = 0.0, gamma: float = 1.0):
        if saturation < 0 or not math.isfinite(saturation):
            raise DomainError(f"saturation must be finite and >= 0, got {saturation}")
        if gamma <= 0 or not math.isfinite(gamma):
            raise DomainError(f"gamma must be finite and > 0, got {gamma}")
        self.saturation = float(saturation)
        self.detuning_scaled = float(detuning_scaled)
        self.gamma = float(gamma)

        g = self.gamma
        delta = self.detuning_scaled * g
        kappa = g * math.sqrt(self.saturation)
        trace = -(g + 1j * delta)
        disc = cmath.sqrt(g * g - delta * delta - kappa * kappa - 2j * g * delta)
        lp = 0.5 * (trace + disc)
        lm = 0.5 * (trace - disc)
        if lp.real < lm.real:
            lp, lm = lm, lp
        self.lambda_plus = lp
        self.lambda_minus = lm
        self._kappa = kappa
        self._zero_drive = self.saturation == 0.0
        self.degenerate = (not self._zero_drive) and abs(lp - lm) < DEGENERACY_THRESHOLD * g

        if self._zero_drive:
            self.regime = "undriven"
        elif self.detuning_scaled != 0.0:
            self.regime = "detuned"
        elif self.degenerate:
            self.regime = "critically_damped"
        elif self.saturation < 1.0:
            self.regime = "overdamped"
        else:
            self.regime = "underdamped"

        if self.degenerate:
            # psi3 ~ t exp(lambda t); normalized Erlang-3 shape with rate b
            self._b = -2.0 * (0.5 * (lp + lm)).real
        elif not self._zero_drive:
            self._mu1 = 2.0 * lp.real
            self._mu2 = 2.0 * lm.real
            self._mu3 = lp + lm.conjugate()
            self._K = g * kappa * kappa / (2.0 * abs(lp - lm) ** 2)
        self._tables: dict[int, np.ndarray] = {}
        self._cutoff_cache: dict[float, float] = {}

    @classmethod
    def from_config(cls, cfg: PumpConfig) -> "WaitingTimeModel":
        return cls(cfg.saturation, cfg.detuning_scaled, cfg.gamma)

    # -- density / CDF ---------------------------------------------------

    def _check_time(self, t):
        scalar = np.ndim(t) == 0
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < 0):
            raise DomainError("waiting time must be >= 0")
        return t, scalar

    def density(self, t):
        """w(t); exactly zero at t = 0."""
        t, scalar = self._check_time(t)
        if self._zero_drive:
            out = np.zeros_like(t)
        elif self.degenerate:
            b = self._b
            out = 0.5 * b**3 * t * t * np.exp(-b * t)
        else:
            out = self._K * (
                np.exp(self._mu1 * t)
                + np.exp(self._mu2 * t)
                - 2.0 * np.exp(self._mu3 * t).real
            )
            np.maximum(out, 0.0, out=out)  # clip roundoff at the sinh nodes
        return float(out[0]) if scalar else out

    def cdf(self, t):
        t, scalar = self._check_time(t)
        if self._zero_drive:
            out = np.zeros_like(t)
        elif self.degenerate:
            x = self._b * t
            out = -np.expm1(-x) - np.exp(-x) * x * (1.0 + 0.5 * x)
        else:
            out = self._K * (
                np.expm1(self._mu1 * t) / self._mu1
                + np.expm1(self._mu2 * t) / self._mu2
                - 2.0 * ((np.exp(self._mu3 * t) - 1.0) / self._mu3).real
            )
            np.clip(out, 0.0, 1.0, out=out)
        return float(out[0]) if scalar else out

    def survival(self, t):
        """1 - cdf(t), computed without cancellation in the far tail."""
        t, scalar = self._check_time(t)
        if self._zero_drive:
            out = np.ones_like(t)
        elif self.degenerate:
            x = self._b * t
            out = np.exp(-x) * (1.0 + x * (1.0 + 0.5 * x))
        else:
            out = self._K * (
                -np.exp(self._mu1 * t) / self._mu1
                - np.exp(self._mu2 * t) / self._mu2
                + 2.0 * (np.exp(self._mu3 * t) / self._mu3).real
            )
            np.clip(out, 0.0, 1.0, out=out)
        return float(out[0]) if scalar else out

    def mean(self) -> float:
        """Mean waiting time, from the same exponent set."""
        if self._zero_drive:
            return math.inf
        if self.degenerate:
            return 3.0 / self._b
        return self._K * (
            1.0 / self._mu1**2 + 1.0 / self._mu2**2 - 2.0 * (1.0 / self._mu3**2).real
        )

    def support_cutoff(self, tail: float = 1e-12) -> float:
        """Time beyond which less than `tail` probability remains."""
        if self._zero_drive:
            raise DomainError("no waiting-time distribution at zero saturation")
        if tail in self._cutoff_cache:
            return self._cutoff_cache[tail]
        t = 4.0 * self.mean() + 1.0 / self.gamma
        while float(self.survival(t)) > tail:
            t *= 2.0
            if t > 1e12 / self.gamma:
                raise RuntimeError("waiting-time tail does not decay; invalid model")
        self._cutoff_cache[tail] = t
        return t

    # -- inversion / sampling ---------------------------------------------

    def quantile(self, u):
        """Exact inverse CDF: bracketed bisection refined with safeguarded Newton.

        Accepts scalars or arrays with 0 <= u < 1; accurate to ~1e-10 relative.
        """
        if self._zero_drive:
            raise DomainError("cannot invert the CDF at zero saturation")
        u_arr = np.atleast_1d(np.asarray(u, dtype=float))
        if np.any((u_arr < 0.0) | (u_arr >= 1.0)):
            raise DomainError("quantile argument must lie in [0, 1)")
        hi_tail = min(1e-16, float(np.min(1.0 - u_arr)) / 8.0)
        hi = np.full_like(u_arr, self.support_cutoff(max(hi_tail, 1e-300)))
        lo = np.zeros_like(u_arr)
        for _ in range(45):
            mid = 0.5 * (lo + hi)
            above = self.cdf(mid) > u_arr
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
        t = 0.5 * (lo + hi)
        for _ in range(6):
            f = self.cdf(t) - u_arr
            above = f > 0
            hi = np.where(above, t, hi)
            lo = np.where(above, lo, t)
            w = self.density(t)
            step = np.divide(f, w, out=np.zeros_like(f), where=w > 0)
            t_new = t - step
            bad = (t_new <= lo) | (t_new >= hi) | ~np.isfinite(t_new) | (w <= 0)
            t = np.where(bad, 0.5 * (lo + hi), t_new)
        t = np.where(u_arr == 0.0, 0.0, t)
        return float(t[0]) if np.isscalar(u) or np.asarray(u).ndim == 0 else t

    def sample(self, rng, size=None):
        """Draw waiting times by inversion of the closed-form CDF."""
        if size is None:
            return float(self.quantile(rng.random()))
        return self.quantile(rng.random(size))

    def inverse_table(self, n_cells: int = 1 << 16) -> np.ndarray:
        """Equal-probability inverse-CDF nodes t_i = F^{-1}(i * u_max / n_cells).

        Built once from the exact inversion; consumers interpolate linearly
        inside cells of probability mass u_max/n_cells, so any distributional
        error is bounded by one cell mass.  Cached per cell count.
        """
        if n_cells not in self._tables:
            u_nodes = np.linspace(0.0, _TABLE_U_MAX, n_cells + 1)
            table = self.quantile(u_nodes)
            table.setflags(write=False)
            self._tables[n_cells] = table
        return self._tables[n_cells]

    # -- spectral transform ------------------------------------------------

    def spectral(self, omega):
        """Fourier transform w_bar(omega) = integral of w(t) exp(i omega t).

        Phase always comes from the complex value itself; the resonant
        tangent formulas are cross-checks only (they lose the quadrant).
        """
        omega = np.asarray(omega, dtype=float)
        if not np.all(np.isfinite(omega)):
            raise DomainError("frequency must be finite")
        if self._zero_drive:
            out = np.zeros(omega.shape, dtype=complex)
        elif self.degenerate:
            b = self._b
            out = b**3 / (b - 1j * omega) ** 3
        else:
            out = self._K * (
                -1.0 / (self._mu1 + 1j * omega)
                - 1.0 / (self._mu2 + 1j * omega)
                + 1.0 / (self._mu3 + 1j * omega)
                + 1.0 / (self._mu3.conjugate() + 1j * omega)
            )
        return complex(out) if out.ndim == 0 else out


# -- resonant closed forms used as oracles --------------------------------


def spectral_resonant_closed(saturation, omega, gamma: float = 1.0):
    """Resonant w_bar(omega) in closed form, valid for every saturation.

    The piecewise sign sometimes quoted with this expression is not needed:
    this bare form matches the eigenvalue representation and direct Fourier
    quadrature for all S (it passes smoothly through S = 1).
    """
    g = gamma
    z = g - 1j * np.asarray(omega, dtype=float)
    out = g**3 * np.asarray(saturation, dtype=float) / (z * (g * g * (np.asarray(saturation) - 1.0) + z * z))
    return complex(out) if np.ndim(out) == 0 else out


def resonant_modulus_product_form(saturation, nu_tilde):
    """|w_bar(2 nu)| at resonance: S / sqrt((1+nt^2)[(S-nt^2)^2 + 4 nt^2])."""
    S = np.asarray(saturation, dtype=float)
    n2 = nu_tilde * nu_tilde
    out = S / np.sqrt((1.0 + n2) * ((S - n2) ** 2 + 4.0 * n2))
    return float(out) if out.ndim == 0 else out


def resonant_modulus_saturation_form(saturation, nu_tilde):
    """Algebraically identical variant written around the saturated value."""
    S = np.asarray(saturation, dtype=float)
    n2 = nu_tilde * nu_tilde
    wsat = 1.0 / math.sqrt(1.0 + n2)
    out = S * wsat / np.sqrt((S - 1.0) ** 2 + 2.0 * (S - 1.0) * (1.0 - n2) + (1.0 + n2) ** 2)
    return float(out) if out.ndim == 0 else out


def resonant_phase_tangent(saturation, nu_tilde):
    """tan(phi_w) at 2 nu for resonant drive; quadrant-blind by construction."""
    S = np.asarray(saturation, dtype=float)
    n2 = nu_tilde * nu_tilde
    out = nu_tilde * (S + 2.0 - n2) / (S - 3.0 * n2)
    return float(out) if out.ndim == 0 else out


def saturated_modulus(nu_tilde: float) -> float:
    """S -> infinity limit of |w_bar(2 nu)|: 1/sqrt(1 + nu_tilde^2)."""
    return 1.0 / math.sqrt(1.0 + nu_tilde * nu_tilde)


def saturated_phase(nu_tilde: float) -> float:
    """S -> infinity limit of the phase of w_bar(2 nu): arctan(nu_tilde)."""
    return math.atan(nu_tilde)
