"""Mapping of initial vibrational moments through the completed pump process.

The recoil density acts as a convolution kernel in phase space, so final
moments of the pumped level are binomial (Leibniz) combinations of initial
moments weighted by recoil moments.  The coherent amplitude passes through
untouched; the mean excitation gains P1(0) * n_bar_p; second moments gain
the corresponding recoil moments.

All moments here are normally ordered.  Converters from symmetrically
ordered inputs are provided explicitly; no hidden reordering happens.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb

from .errors import DomainError, InvariantViolation, UnsuppliedMoment
from .moments import RecoilMomentSet

_TOL = 1e-9


@dataclass(frozen=True)
class LevelMoments:
    """Normally ordered vibrational moments of the population in one electronic level."""

    population: float
    b_mean: complex = 0j
    n_mean: float = 0.0
    b2_mean: complex = 0j
    b2dag_b2_mean: float = 0.0  # <b^dag^2 b^2>

    def moment_table(self) -> dict[tuple[int, int], complex]:
        return {
            (0, 0): 1.0 + 0j,
            (0, 1): complex(self.b_mean),
            (1, 0): complex(self.b_mean).conjugate(),
            (1, 1): complex(self.n_mean),
            (0, 2): complex(self.b2_mean),
            (2, 0): complex(self.b2_mean).conjugate(),
            (2, 2): complex(self.b2dag_b2_mean),
        }


@dataclass(frozen=True)
class VibrationalMomentSet:
    """Moments per electronic level, before or after pumping."""

    level1: LevelMoments
    level2: LevelMoments

    def validate(self) -> "VibrationalMomentSet":
        p1, p2 = self.level1.population, self.level2.population
        if abs(p1 + p2 - 1.0) > _TOL:
            raise InvariantViolation(f"populations sum to {p1 + p2}, expected 1")
        for name, lvl in (("level1", self.level1), ("level2", self.level2)):
            if not -_TOL <= lvl.population <= 1.0 + _TOL:
                raise InvariantViolation(f"{name} population {lvl.population} outside [0, 1]")
            if lvl.population <= 0.0:
                continue
            if lvl.n_mean < -_TOL:
                raise InvariantViolation(f"{name} mean excitation {lvl.n_mean} is negative")
            if lvl.n_mean < abs(lvl.b_mean) ** 2 - _TOL:
                raise InvariantViolation(
                    f"{name}: <n> = {lvl.n_mean} below |<b>|^2 = {abs(lvl.b_mean) ** 2}"
                )
            if lvl.b2dag_b2_mean < -_TOL:
                raise InvariantViolation(f"{name}: <b^dag2 b^2> = {lvl.b2dag_b2_mean} is negative")
        return self

    # -- full (population-weighted) averages --------------------------------

    def full_b(self) -> complex:
        return self.level1.population * self.level1.b_mean + self.level2.population * self.level2.b_mean

    def full_n(self) -> float:
        return self.level1.population * self.level1.n_mean + self.level2.population * self.level2.n_mean

    def full_b2(self) -> complex:
        return self.level1.population * self.level1.b2_mean + self.level2.population * self.level2.b2_mean

    def full_b2dag_b2(self) -> float:
        return (
            self.level1.population * self.level1.b2dag_b2_mean
            + self.level2.population * self.level2.b2dag_b2_mean
        )

    def number_variance(self) -> float:
        """<[Delta n]^2> of the full state: <b^dag2 b^2> + <n> - <n>^2."""
        n = self.full_n()
        return self.full_b2dag_b2() + n - n * n

    def quadrature_mean(self, phi: float) -> float:
        return math.sqrt(2.0) * (self.full_b() * complex(math.cos(phi), math.sin(phi))).real

    def quadrature_variance(self, phi: float) -> float:
        """<[Delta q_phi]^2> = <n> + 1/2 + Re(<b^2> e^{2 i phi}) - <q_phi>^2."""
        rot = complex(math.cos(2.0 * phi), math.sin(2.0 * phi))
        return self.full_n() + 0.5 + (self.full_b2() * rot).real - self.quadrature_mean(phi) ** 2

    # -- JSON ----------------------------------------------------------------

    def to_dict(self) -> dict:
        def enc(lvl: LevelMoments) -> dict:
            return {
                "population": lvl.population,
                "b_mean": [lvl.b_mean.real, lvl.b_mean.imag],
                "n_mean": lvl.n_mean,
                "b2_mean": [lvl.b2_mean.real, lvl.b2_mean.imag],
                "b2dag_b2_mean": lvl.b2dag_b2_mean,
            }

        return {"level1": enc(self.level1), "level2": enc(self.level2)}

    @classmethod
    def from_dict(cls, raw: dict) -> "VibrationalMomentSet":
        def dec(d: dict) -> LevelMoments:
            return LevelMoments(
                population=float(d["population"]),
                b_mean=complex(*d.get("b_mean", (0.0, 0.0))),
                n_mean=float(d.get("n_mean", 0.0)),
                b2_mean=complex(*d.get("b2_mean", (0.0, 0.0))),
                b2dag_b2_mean=float(d.get("b2dag_b2_mean", 0.0)),
            )

        try:
            return cls(level1=dec(raw["level1"]), level2=dec(raw["level2"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvariantViolation(f"malformed moment set: {exc}") from exc


def ground_state(p1: float = 1.0) -> VibrationalMomentSet:
    """Motional ground state with population p1 in the unpumped level."""
    return VibrationalMomentSet(LevelMoments(population=p1), LevelMoments(population=1.0 - p1))


def normal_from_symmetric(
    population: float,
    b_mean: complex,
    n_symmetric: float,
    b2_mean: complex,
    b4_symmetric: float,
) -> LevelMoments:
    """Convert symmetrically ordered second/fourth moments to normal order.

    {b^dag b}_sym = n + 1/2 and {b^dag2 b^2}_sym = b^dag2 b^2 + 2 n + 1/2;
    first moments and <b^2> are ordering-independent.
    """
    n = n_symmetric - 0.5
    return LevelMoments(
        population=population,
        b_mean=b_mean,
        n_mean=n,
        b2_mean=b2_mean,
        b2dag_b2_mean=b4_symmetric - 2.0 * n - 0.5,
    )


def _recoil_table(rm) -> dict[tuple[int, int], complex]:
    if isinstance(rm, RecoilMomentSet):
        return rm.supplied_moments()
    return {k: complex(v) for k, v in dict(rm).items()}


def leibniz_map(k: int, l: int, initial: VibrationalMomentSet, rm, initial_extra=None) -> complex:
    """General moment map: final <{b^dag^k b^l}>_2 for k + l <= 4.

    `rm` is a RecoilMomentSet or a mapping {(k, l): moment}; MC-estimated
    recoil moments may be supplied that way.  Raises UnsuppliedMoment when a
    required recoil moment (e.g. the mixed <alpha* alpha^3>) is missing.
    Initial-state moments beyond the LevelMoments fields (third order and
    mixed fourth order) must be passed in `initial_extra` as
    {(n, m): <b^dag^n b^m>}; nothing is ever silently assumed zero.
    """
    if k < 0 or l < 0 or k + l > 4:
        raise DomainError(f"moment order ({k}, {l}) outside the supported k + l <= 4")
    initial.validate()
    recoil = _recoil_table(rm)
    init1 = initial.level1.moment_table()
    init2 = initial.level2.moment_table()
    if initial_extra:
        extra = {key: complex(val) for key, val in dict(initial_extra).items()}
        init1 = {**extra, **init1}
        init2 = {**extra, **init2}
    p1, p2 = initial.level1.population, initial.level2.population
    total = 0j
    if p2 != 0.0:
        if (k, l) not in init2:
            raise DomainError(f"initial moment ({k}, {l}) is not tracked; pass it via initial_extra")
        total += p2 * init2[(k, l)]
    if p1 == 0.0:
        return total
    for n in range(k + 1):
        for m in range(l + 1):
            order = (k - n, l - m)
            if order == (0, 0):
                weight = 1.0 + 0j
            elif order not in recoil:
                raise UnsuppliedMoment(order)
            else:
                weight = recoil[order]
            if weight == 0:
                continue
            if (n, m) not in init1:
                raise DomainError(f"initial moment ({n}, {m}) is not tracked; pass it via initial_extra")
            total += p1 * comb(k, n) * comb(l, m) * weight * init1[(n, m)]
    return total


def map_state(initial: VibrationalMomentSet, rm: RecoilMomentSet) -> VibrationalMomentSet:
    """Moments of the pumped level after the process completes (t -> infinity).

    The coherent amplitude is passed through bit-exactly; the mean
    excitation gains P1(0) n_bar_p; <b^2> gains P1(0) <alpha^2>_p; the
    normally ordered fourth moment follows the Leibniz combination.
    """
    initial.validate()
    p1 = initial.level1.population
    lvl1 = initial.level1
    b_final = initial.full_b()
    n_final = initial.full_n() + p1 * rm.n_bar_p
    b2_final = initial.full_b2() + p1 * rm.alpha2
    b4_final = initial.full_b2dag_b2() + p1 * (
        2.0 * (rm.alpha2 * complex(lvl1.b2_mean).conjugate()).real
        + 4.0 * rm.n_bar_p * lvl1.n_mean
        + rm.alpha4
    )
    final2 = LevelMoments(
        population=1.0,
        b_mean=b_final,
        n_mean=n_final,
        b2_mean=b2_final,
        b2dag_b2_mean=b4_final,
    )
    return VibrationalMomentSet(level1=LevelMoments(population=0.0), level2=final2)


def quadrature_variance_map(initial: VibrationalMomentSet, rm: RecoilMomentSet, phi: float) -> float:
    """Final quadrature variance: initial variance plus P1(0) * recoil noise at phi."""
    initial.validate()
    added = rm.n_bar_p * (1.0 - rm.anisotropy_A * math.cos(2.0 * phi + rm.phi_A))
    return initial.quadrature_variance(phi) + initial.level1.population * added


def number_variance_map(initial: VibrationalMomentSet, rm: RecoilMomentSet) -> float:
    """Final variance of the vibrational quantum number in the pumped level.

    Initial-state dependence enters through
    m1 = <n>_1 + 1/2 - A Re(<b^2>_1 e^{-i phi_A}) and
    m2 = n_bar_p/2 + <n>_1 - <n>_2.
    """
    initial.validate()
    p1, p2 = initial.level1.population, initial.level2.population
    lvl1, lvl2 = initial.level1, initial.level2
    rot = complex(math.cos(-rm.phi_A), math.sin(-rm.phi_A))
    m1 = lvl1.n_mean + 0.5 - rm.anisotropy_A * (complex(lvl1.b2_mean) * rot).real
    m2 = 0.5 * rm.n_bar_p + lvl1.n_mean - lvl2.n_mean
    return initial.number_variance() + p1 * (rm.dn_p_sq + 2.0 * rm.n_bar_p * (m1 + p2 * m2))
