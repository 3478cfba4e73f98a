"""Binned estimates of the recoil density and the observables built on it.

Both phase-space axes are expressed in units of eta1 (position-like
Re(alpha)/eta1 against momentum-like Im(alpha)/eta1), so runs with
different kick sizes land on comparable extents.  Quadratures use
q(phi) = sqrt(2) Re(alpha exp(i phi)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InsufficientSamples

DEFAULT_GRID = 200
DEFAULT_BINS = 200


@dataclass
class PhaseSpaceHistogram:
    """2D recoil-density histogram; a mergeable monoid.

    Out-of-range samples are counted, never dropped silently.
    """

    x_edges: np.ndarray
    p_edges: np.ndarray
    eta1: float
    counts: np.ndarray = field(default=None)
    total: int = 0
    out_of_range: int = 0

    def __post_init__(self):
        if self.counts is None:
            self.counts = np.zeros((len(self.x_edges) - 1, len(self.p_edges) - 1), dtype=np.int64)

    @classmethod
    def create(cls, eta1: float, grid=(DEFAULT_GRID, DEFAULT_GRID), extent: float = 4.0):
        """Symmetric grid over [-extent, extent]^2 in units of eta1."""
        nx, np_ = grid
        return cls(
            x_edges=np.linspace(-extent, extent, nx + 1),
            p_edges=np.linspace(-extent, extent, np_ + 1),
            eta1=eta1,
        )

    @property
    def in_range(self) -> int:
        return self.total - self.out_of_range

    def accumulate(self, alphas: np.ndarray) -> "PhaseSpaceHistogram":
        """Bin Re(alpha)/eta1 against Im(alpha)/eta1; returns self."""
        alphas = np.asarray(alphas)
        x = alphas.real / self.eta1
        p = alphas.imag / self.eta1
        h, _, _ = np.histogram2d(x, p, bins=(self.x_edges, self.p_edges))
        self.counts += h.astype(np.int64)
        self.total += alphas.size
        self.out_of_range += alphas.size - int(h.sum())
        return self

    def merge(self, other: "PhaseSpaceHistogram") -> "PhaseSpaceHistogram":
        if not (
            np.array_equal(self.x_edges, other.x_edges)
            and np.array_equal(self.p_edges, other.p_edges)
            and self.eta1 == other.eta1
        ):
            raise DomainError("cannot merge histograms with different grids")
        self.counts += other.counts
        self.total += other.total
        self.out_of_range += other.out_of_range
        return self

    def density(self) -> np.ndarray:
        """Counts normalized to a probability density over the grid."""
        if self.in_range == 0:
            return np.zeros_like(self.counts, dtype=float)
        dx = np.diff(self.x_edges)[:, None]
        dp = np.diff(self.p_edges)[None, :]
        return self.counts / (self.in_range * dx * dp)

    def x_marginal(self) -> np.ndarray:
        """In-range counts summed over the momentum axis."""
        return self.counts.sum(axis=1)


@dataclass
class QuadratureHistogram:
    """1D histogram of q = sqrt(2) Re(alpha exp(i phi)) at a fixed phase."""

    phi: float
    edges: np.ndarray
    counts: np.ndarray = field(default=None)
    total: int = 0
    out_of_range: int = 0

    def __post_init__(self):
        if self.counts is None:
            self.counts = np.zeros(len(self.edges) - 1, dtype=np.int64)

    @property
    def in_range(self) -> int:
        return self.total - self.out_of_range

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    def accumulate(self, alphas: np.ndarray) -> "QuadratureHistogram":
        q = quadrature_values(alphas, self.phi)
        h, _ = np.histogram(q, bins=self.edges)
        self.counts += h.astype(np.int64)
        self.total += q.size
        self.out_of_range += q.size - int(h.sum())
        return self

    def merge(self, other: "QuadratureHistogram") -> "QuadratureHistogram":
        if not np.array_equal(self.edges, other.edges) or self.phi != other.phi:
            raise DomainError("cannot merge quadrature histograms with different binning")
        self.counts += other.counts
        self.total += other.total
        self.out_of_range += other.out_of_range
        return self

    def normalized(self) -> np.ndarray:
        """Density view; integrates to 1 over the in-range bins."""
        if self.in_range == 0:
            return np.zeros_like(self.counts, dtype=float)
        return self.counts / (self.in_range * np.diff(self.edges))


def quadrature_values(alphas, phi: float) -> np.ndarray:
    alphas = np.asarray(alphas)
    return math.sqrt(2.0) * (alphas * np.exp(1j * phi)).real


def quadrature_distribution(
    alphas, phi: float, bins: int = DEFAULT_BINS, q_range: float = 2.0
) -> QuadratureHistogram:
    """Histogram the quadrature at phase phi over the symmetric range [-q_range, q_range]."""
    if bins < 2:
        raise DomainError("need at least 2 bins")
    if not q_range > 0:
        raise DomainError("q_range must be positive (the range is symmetric about 0)")
    hist = QuadratureHistogram(phi=phi, edges=np.linspace(-q_range, q_range, bins + 1))
    return hist.accumulate(alphas)


@dataclass(frozen=True)
class EmpiricalMoments:
    """Plug-in moment estimates with standard errors (componentwise for complex)."""

    n_samples: int
    mean_alpha: complex
    se_alpha: complex
    mean_abs2: float
    se_abs2: float
    mean_alpha2: complex
    se_alpha2: complex
    mean_abs4: float
    se_abs4: float


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    n = x.size
    m = float(np.mean(x))
    var = float(np.sum((x - m) ** 2)) / (n - 1)
    return m, math.sqrt(var / n)


def empirical_moments(alphas) -> EmpiricalMoments:
    """Sample moments of the recoil shifts; standard errors from the sample spread."""
    alphas = np.asarray(alphas)
    n = alphas.size
    if n < 2:
        raise InsufficientSamples("need at least 2 samples for standard errors")
    re, im = alphas.real, alphas.imag
    abs2 = re * re + im * im
    a2 = alphas * alphas
    m_re, se_re = _mean_se(re)
    m_im, se_im = _mean_se(im)
    m_abs2, se_abs2 = _mean_se(abs2)
    m2_re, se2_re = _mean_se(a2.real)
    m2_im, se2_im = _mean_se(a2.imag)
    m_abs4, se_abs4 = _mean_se(abs2 * abs2)
    return EmpiricalMoments(
        n_samples=n,
        mean_alpha=complex(m_re, m_im),
        se_alpha=complex(se_re, se_im),
        mean_abs2=m_abs2,
        se_abs2=se_abs2,
        mean_alpha2=complex(m2_re, m2_im),
        se_alpha2=complex(se2_re, se2_im),
        mean_abs4=m_abs4,
        se_abs4=se_abs4,
    )


@dataclass(frozen=True)
class TomographySignal:
    """Ground-state occupation P1(tau) probed at one quadrature phase."""

    tau: np.ndarray
    p1: np.ndarray
    imag_residual: np.ndarray

    @property
    def max_imag(self) -> float:
        return float(np.max(np.abs(self.imag_residual))) if self.imag_residual.size else 0.0


def tomography_signal(qhist: QuadratureHistogram, tau_grid) -> TomographySignal:
    """P1(tau) = 1/2 - 1/2 * sum_k m_k exp(-i q_k tau) over the normalized bins.

    A direct sum over bin centers (tau grids are small and may be
    non-uniform).  The imaginary part of the transform, zero for a
    symmetric distribution, is returned as a diagnostic.
    """
    tau = np.asarray(tau_grid, dtype=float)
    if not np.all(np.isfinite(tau)):
        raise DomainError("tau values must be finite")
    if qhist.in_range == 0:
        raise InsufficientSamples("empty quadrature histogram")
    mass = qhist.counts / qhist.in_range
    phase = np.exp(-1j * np.outer(tau, qhist.centers))
    transform = phase @ mass
    return TomographySignal(
        tau=tau,
        p1=0.5 - 0.5 * transform.real,
        imag_residual=0.5 * transform.imag,
    )
