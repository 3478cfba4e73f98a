"""Closed-form moments of the recoil density and the anisotropy analysis.

Every quantity here is an exact function of the configuration: the dipole
projection moments <cos^k theta>_a, the branching ratios, the Lamb-Dicke
parameters, and the spectral waiting-time distribution evaluated at even
multiples of the trap frequency.  These serve as the oracle for the Monte
Carlo trajectory engine.

Conventions: t0 = 0 throughout, so no trivial phase factor appears in the
even moments; phi_A is reported in (-pi, pi] from complex arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import PumpConfig
from .dipole import DipoleCharacteristic
from .errors import DomainError, EmptyGrid, NotResonant
from .waiting_time import WaitingTimeModel


@dataclass(frozen=True)
class RecoilMomentSet:
    """Analytic moments of the recoil density for one configuration.

    n_bar_p       mean recoil-induced excitation <alpha* alpha>
    alpha2        <alpha^2>, equal to -n_bar_p * A * exp(i phi_A) by construction
    anisotropy_A  modulus of the anisotropy, in [0, 1]
    phi_A         orientation of the anisotropy, in (-pi, pi]
    alpha4        <alpha*^2 alpha^2>  (real, >= 0)
    dn_p_sq       variance of |alpha|^2:  alpha4 - n_bar_p^2
    alpha_pow4    <alpha^4>, the pure fourth power (needs w_bar at 4 nu)
    """

    n_bar_p: float
    alpha2: complex
    anisotropy_A: float
    phi_A: float
    alpha4: float
    dn_p_sq: float
    alpha_pow4: complex = 0j

    def supplied_moments(self) -> dict[tuple[int, int], complex]:
        """All (k, l) recoil moments with k + l <= 4 that have closed forms.

        Odd-order moments vanish identically; the mixed (1,3)/(3,1) pair has
        no closed form and is deliberately absent.
        """
        table: dict[tuple[int, int], complex] = {(0, 0): 1.0 + 0j}
        for k in range(5):
            for l in range(5 - k):
                if (k + l) % 2 == 1:
                    table[(k, l)] = 0j
        table[(1, 1)] = complex(self.n_bar_p)
        table[(0, 2)] = self.alpha2
        table[(2, 0)] = self.alpha2.conjugate()
        table[(2, 2)] = complex(self.alpha4)
        table[(0, 4)] = self.alpha_pow4
        table[(4, 0)] = self.alpha_pow4.conjugate()
        return table


def dipole_pair(cfg: PumpConfig) -> tuple[DipoleCharacteristic, DipoleCharacteristic]:
    """Characteristics of the recycling (1) and pumping (2) transitions."""
    return (
        DipoleCharacteristic.from_angle(cfg.dipole_theta1),
        DipoleCharacteristic.from_angle(cfg.dipole_theta2),
    )


def _spectral_at(cfg: PumpConfig, l: int = 1) -> complex:
    """w_bar evaluated at 2 l nu = l * nu_tilde * gamma."""
    wtm = WaitingTimeModel.from_config(cfg)
    return wtm.spectral(l * cfg.nu_tilde * cfg.gamma)


def _anisotropy_factor(cfg: PumpConfig, l: int = 1) -> complex:
    """lambda2 w_bar(2 l nu) / (1 - lambda1 w_bar(2 l nu))."""
    wbar = _spectral_at(cfg, l)
    return cfg.lambda2 * wbar / (1.0 - cfg.lambda1 * wbar)


def mean_excitation(cfg: PumpConfig) -> float:
    """n_bar_p = eta2^2 <cos^2>_2 + (lambda1/lambda2) eta1^2 <cos^2>_1.

    Independent of saturation and detuning: only the emission count and the
    kick sizes enter.
    """
    d1, d2 = dipole_pair(cfg)
    return cfg.eta2**2 * d2.moment(2) + (cfg.lambda1 / cfg.lambda2) * cfg.eta1**2 * d1.moment(2)


def even_moment(cfg: PumpConfig, l: int) -> complex:
    """<alpha^(2l)> for l in {1, 2}; higher orders have no use here.

    For l = 2 the expansion of (sum of kicks)^4 also picks up pair terms
    c_j^2 c_k^2 with multiplicity 6 per unordered pair; their time average
    couples w_bar at both 2 nu and 4 nu.
    """
    if l not in (1, 2):
        raise DomainError(f"even_moment implemented for l in {{1, 2}}, got {l}")
    d1, d2 = dipole_pair(cfg)
    lam1, lam2 = cfg.lambda1, cfg.lambda2
    weight = cfg.eta2 ** (2 * l) * d2.moment(2 * l) + (lam1 / lam2) * cfg.eta1 ** (2 * l) * d1.moment(2 * l)
    same = (-1.0) ** l * weight * _anisotropy_factor(cfg, l)
    if l == 1:
        return same
    w2 = _spectral_at(cfg, 1)
    w4 = _spectral_at(cfg, 2)
    pair = (
        6.0
        * lam1
        * lam2
        * w2
        * w4
        / ((1.0 - lam1 * w2) * (1.0 - lam1 * w4))
        * cfg.eta1**2
        * d1.moment(2)
        * mean_excitation(cfg)
    )
    return same + pair


def alpha2_moment(cfg: PumpConfig) -> complex:
    """<alpha^2> = -n_bar_p A exp(i phi_A)."""
    return even_moment(cfg, 1)


def anisotropy(cfg: PumpConfig) -> tuple[float, float]:
    """(A, phi_A) from the complex factor lambda2 w_bar / (1 - lambda1 w_bar)."""
    z = _anisotropy_factor(cfg, 1)
    return abs(z), math.atan2(z.imag, z.real)


def quadrature_variance(cfg: PumpConfig, phi: float) -> float:
    """Variance of the recoil quadrature at phase phi: n_bar_p [1 - A cos(2 phi + phi_A)]."""
    n_bar = mean_excitation(cfg)
    a, phi_a = anisotropy(cfg)
    return n_bar * (1.0 - a * math.cos(2.0 * phi + phi_a))


def extremal_quadratures(cfg: PumpConfig) -> tuple[float, float, float, float]:
    """(phi_minus, phi_plus, var_minus, var_plus): extremal phases and variances.

    phi_minus = -phi_A/2 minimizes the variance, phi_plus = phi_minus + pi/2
    maximizes it; the variances are n_bar_p (1 -+ A).
    """
    n_bar = mean_excitation(cfg)
    a, phi_a = anisotropy(cfg)
    phi_minus = -0.5 * phi_a
    return phi_minus, phi_minus + 0.5 * math.pi, n_bar * (1.0 - a), n_bar * (1.0 + a)


def fourth_moment(cfg: PumpConfig) -> float:
    """<alpha*^2 alpha^2>: pure fourth-order kicks plus the pair cross terms.

    For independent zero-mean kicks c_j the expansion of E|sum c_j|^4
    carries 4 E|c_j|^2 E|c_k|^2 + 2 Re E[c_j^2] E[conj(c_k)^2] per unordered
    pair, which after the geometric emission-count average gives the
    (2 + A cos phi_A) factor below.  In the many-emission limit this makes
    dn_p asymptotically sqrt(3) n_bar_p, the kurtosis of the exp(-|q|)
    quadrature profile.
    """
    d1, d2 = dipole_pair(cfg)
    ratio = cfg.lambda1 / cfg.lambda2
    pure = cfg.eta2**4 * d2.moment(4) + ratio * cfg.eta1**4 * d1.moment(4)
    n_bar = mean_excitation(cfg)
    cross = ratio * cfg.eta1**2 * d1.moment(2)  # n_bar_p minus the final-kick share
    a, phi_a = anisotropy(cfg)
    return pure + 2.0 * n_bar * cross * (2.0 + a * math.cos(phi_a))


def n_variance(cfg: PumpConfig) -> float:
    """delta n_p^2 = <alpha*^2 alpha^2> - n_bar_p^2."""
    return fourth_moment(cfg) - mean_excitation(cfg) ** 2


def recoil_moments(cfg: PumpConfig) -> RecoilMomentSet:
    """Bundle of every closed-form recoil moment for one configuration."""
    n_bar = mean_excitation(cfg)
    z = _anisotropy_factor(cfg, 1)
    a4 = fourth_moment(cfg)
    return RecoilMomentSet(
        n_bar_p=n_bar,
        alpha2=-n_bar * z,
        anisotropy_A=abs(z),
        phi_A=math.atan2(z.imag, z.real),
        alpha4=a4,
        dn_p_sq=a4 - n_bar**2,
        alpha_pow4=even_moment(cfg, 2),
    )


# -- resonant saturation dependence ----------------------------------------


def anisotropy_resonant_closed(saturation, lambda2: float, nu_tilde: float):
    """A(S) for resonant pumping in the resonant-route closed form.

    Cross-checked against the complex w_bar route; the two agree to machine
    precision (see tests).
    """
    S = np.asarray(saturation, dtype=float)
    n2 = nu_tilde * nu_tilde
    out = lambda2 * S / np.sqrt((lambda2 * S - 3.0 * n2) ** 2 + n2 * (S + 2.0 - n2) ** 2)
    return float(out) if out.ndim == 0 else out


def s_max_threshold(nu_tilde: float) -> float:
    """Branching ratio above which A(S) has an interior maximum: (2 - nt^2)/3."""
    return (2.0 - nu_tilde * nu_tilde) / 3.0


def s_max(cfg: PumpConfig) -> float | None:
    """Saturation of the interior anisotropy maximum, or None when A(S) is
    saturation-limited (global maximum at S -> infinity)."""
    if cfg.detuning_scaled != 0.0:
        raise NotResonant("s_max uses the resonant closed form; set detuning_scaled = 0")
    if cfg.lambda2 <= s_max_threshold(cfg.nu_tilde):
        return None
    n2 = cfg.nu_tilde * cfg.nu_tilde
    return (n2 * n2 + 5.0 * n2 + 4.0) / (n2 + 3.0 * cfg.lambda2 - 2.0)


def anisotropy_vs_saturation(cfg: PumpConfig, s_grid) -> list[tuple[float, float, float]]:
    """Table of (S, A, phi_A) over a saturation grid, resonant pumping only."""
    if cfg.detuning_scaled != 0.0:
        raise NotResonant("anisotropy scan uses resonant closed forms; set detuning_scaled = 0")
    s_grid = np.asarray(s_grid, dtype=float)
    if s_grid.size == 0:
        raise EmptyGrid("saturation grid is empty")
    if np.any(s_grid < 0):
        raise DomainError("saturation values must be >= 0")
    rows = []
    for s in s_grid:
        a, phi_a = anisotropy(cfg.replace(saturation=float(s)))
        rows.append((float(s), a, phi_a))
    return rows


def optimize_n_spread(cfg: PumpConfig, s_grid) -> tuple[float, np.ndarray]:
    """Scan the ground-state number-variance objective over saturations.

    Objective: final variance of the vibrational quantum number for an atom
    starting in its electronic and motional ground state, n_bar_p + dn_p^2.
    Only the A(S) cos phi_A(S) cross term depends on S, and its minimum sits
    at S -> 0, so the argmin lands on the smallest grid point.
    Returns (best saturation, objective values over the grid).
    """
    if cfg.detuning_scaled != 0.0:
        raise NotResonant("the spread optimization uses resonant closed forms")
    s_grid = np.asarray(s_grid, dtype=float)
    if s_grid.size == 0:
        raise EmptyGrid("saturation grid is empty")
    if np.any(s_grid < 0):
        raise DomainError("saturation values must be >= 0")
    values = np.empty(s_grid.size)
    for i, s in enumerate(s_grid):
        sub = cfg.replace(saturation=float(s))
        values[i] = mean_excitation(sub) + n_variance(sub)
    return float(s_grid[int(np.argmin(values))]), values
