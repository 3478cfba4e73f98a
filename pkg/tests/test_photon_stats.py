import numpy as np
import pytest

from pumprecoil.errors import DomainError
from pumprecoil.photon_stats import PhotonStatistics


def test_single_emission_limit():
    ps = PhotonStatistics(1.0)
    assert ps.pmf(1) == 1.0
    assert ps.pmf(2) == 0.0
    assert ps.mean() == 1.0
    assert ps.variance() == 0.0


def test_pmf_values():
    ps = PhotonStatistics(0.5)
    assert ps.pmf(0) == 0.0
    assert ps.pmf(3) == pytest.approx(0.125, abs=1e-15)
    np.testing.assert_allclose(ps.pmf(np.arange(1, 5)), [0.5, 0.25, 0.125, 0.0625])


def test_pmf_sums_to_one_tiny_branching():
    ps = PhotonStatistics(1e-5)
    n = np.arange(1, 1_000_001)
    total = ps.pmf(n).sum()
    assert abs(total - 1.0) < 1e-4  # geometric tail beyond 1e6 is exp(-10)


def test_pmf_log_space_deep_tail():
    ps = PhotonStatistics(1e-5)
    # crossing the log-space threshold must be seamless
    left = ps.pmf(1000)
    right = ps.pmf(1001)
    assert right == pytest.approx(left * (1 - 1e-5), rel=1e-12)
    assert ps.pmf(10_000_000) == pytest.approx(1e-5 * np.exp((10_000_000 - 1) * np.log(1 - 1e-5)), rel=1e-10)
    assert ps.pmf(100_000_000) == 0.0  # underflows gracefully


def test_mean_variance_against_series():
    for lam2 in (1e-3, 0.1, 0.5, 0.9, 1.0):
        ps = PhotonStatistics(lam2)
        n_max = 1 if lam2 == 1.0 else int(60.0 / lam2)
        n = np.arange(1, n_max + 1)
        p = ps.pmf(n)
        mean = float(np.sum(n * p))
        var = float(np.sum(n * n * p)) - mean * mean
        assert ps.mean() == pytest.approx(mean, rel=1e-10)
        assert ps.variance() == pytest.approx(var, rel=1e-10, abs=1e-10)


def test_fano_ratio():
    ps = PhotonStatistics(0.5)
    assert ps.variance() / ps.mean() == pytest.approx(ps.lambda1 / ps.lambda2, rel=1e-15)
    assert ps.variance() / ps.mean() == pytest.approx(1.0)


def test_known_mean_variance():
    ps = PhotonStatistics(0.25)
    assert ps.mean() == 4.0
    assert ps.variance() == pytest.approx(12.0, rel=1e-15)


def test_domain_errors():
    with pytest.raises(DomainError):
        PhotonStatistics(0.0)
    with pytest.raises(DomainError):
        PhotonStatistics(1.2)
    ps = PhotonStatistics(0.5)
    with pytest.raises(DomainError):
        ps.pmf(-1)
    with pytest.raises(DomainError):
        ps.pmf(1.5)
