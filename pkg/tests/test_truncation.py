import numpy as np
import pytest

from spheretrunc.ensembles import RngStream, WishartConfig, bartlett_sample, sample_spectrum
from spheretrunc.linalg import eigh
from spheretrunc.oracles import tallis_mu
from spheretrunc.specfun import chi_square_cdf
from spheretrunc.truncation import (
    check_feasibility,
    feasibility_limits,
    mu_bounds,
    truncate_matrix,
    truncate_spectrum,
)


class TestTruncateSpectrum:
    def test_isotropic_matches_tallis(self):
        for v in (1, 2, 5):
            for c in (0.25, 1.0, 4.0):
                for rho in (0.5, 2.0, 10.0):
                    got = truncate_spectrum([c] * v, rho).mu
                    want = tallis_mu(c, v, rho)
                    np.testing.assert_allclose(got, want, atol=1e-12)

    def test_two_dim_unit_closed_form(self):
        mu = truncate_spectrum([1.0, 1.0], 3.0).mu
        want = chi_square_cdf(4, 3.0) / chi_square_cdf(2, 3.0)
        np.testing.assert_allclose(mu, want, atol=1e-13)
        assert want == pytest.approx(0.56918, abs=1e-5)

    def test_damping_and_ordering(self):
        for seed in range(8):
            lam = sample_spectrum(WishartConfig(6), RngStream(seed))
            for rho in (0.3, 1.0, 5.0):
                mu = truncate_spectrum(lam, rho).mu
                assert np.all(mu < lam)
                assert np.all(np.diff(mu) >= -1e-14)
                assert check_feasibility(mu, rho).in_H

    def test_weak_truncation_limit(self):
        lam = np.array([0.8, 1.0, 1.3])
        rho = 50.0 * lam[-1] * lam.size
        mu = truncate_spectrum(lam, rho).mu
        assert np.abs(mu - lam).max() < 1e-8

    def test_monotonicity_in_own_eigenvalue(self):
        # lam_k alpha_k / alpha strictly increases with lam_k
        base = np.array([0.5, 1.0, 2.0])
        rho = 1.5
        mus = []
        for bump in (0.0, 0.05, 0.1, 0.2):
            lam = base.copy()
            lam[1] += bump
            mus.append(truncate_spectrum(lam, rho).mu[1])
        assert all(b > a for a, b in zip(mus, mus[1:]))

    def test_damping_ratio_decreases_in_every_eigenvalue(self):
        # alpha_k / alpha falls when any eigenvalue grows
        base = np.array([0.5, 1.0, 2.0])
        rho = 1.5
        for moved in (0, 1, 2):
            ratios = []
            for bump in (0.0, 0.1, 0.25):
                lam = base.copy()
                lam[moved] += bump
                t = truncate_spectrum(lam, rho)
                ratios.append(t.mu[0] / lam[0] if moved != 0 else t.mu[0] / lam[0])
            assert all(b < a for a, b in zip(ratios, ratios[1:]))

    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            truncate_spectrum([2.0, 1.0], 1.0)


class TestTruncateMatrix:
    def test_isotropic(self):
        c, rho, v = 1.5, 2.0, 3
        out = truncate_matrix(c * np.eye(v), rho)
        np.testing.assert_allclose(out, tallis_mu(c, v, rho) * np.eye(v), atol=1e-12)

    def test_rotation_invariance(self):
        sigma = bartlett_sample(WishartConfig(4), RngStream(3))
        q = eigh(bartlett_sample(WishartConfig(4), RngStream(4))).eigenvectors
        rotated = truncate_matrix(q @ sigma @ q.T, 1.2)
        np.testing.assert_allclose(rotated, q @ truncate_matrix(sigma, 1.2) @ q.T,
                                   atol=1e-9)

    def test_shared_eigenvectors(self):
        sigma = np.array([[2.5, 1.5], [1.5, 2.5]])
        out = truncate_matrix(sigma, 2.0)
        np.testing.assert_allclose(out, out.T)
        mu = truncate_spectrum([1.0, 4.0], 2.0).mu
        dec = eigh(out)
        np.testing.assert_allclose(dec.eigenvalues, mu, atol=1e-12)
        # eigenvectors stay the +/- 45 degree pair
        np.testing.assert_allclose(np.abs(dec.eigenvectors), np.full((2, 2), np.sqrt(0.5)),
                                   atol=1e-10)

    def test_rejects_non_positive_definite(self):
        with pytest.raises(ValueError):
            truncate_matrix(np.diag([1.0, -0.5]), 1.0)


class TestFeasibility:
    def test_boundary_accepted(self):
        rho = 2.0
        report = check_feasibility(np.full(4, rho / 4), rho)
        assert report.in_H and report.violated == []

    def test_sum_violation(self):
        # each entry within its index bound, but the total exceeds rho
        report = check_feasibility(np.array([0.24, 0.26, 0.27, 0.28]), 1.0)
        assert not report.in_H
        assert report.violated == ["sum"]

    def test_rho_third_violation(self):
        report = check_feasibility(np.array([0.05, 0.4]), 1.0)
        assert not report.in_H
        assert "rho/3" in report.violated

    def test_per_index_violation(self):
        # v=5: smallest sorted entry must stay below rho/5
        mu = np.array([0.25, 0.26, 0.27, 0.28, 0.29]) * 0.9
        report = check_feasibility(mu, 1.0)
        assert not report.in_H
        assert "per-index" in report.violated

    def test_limits_shape(self):
        lims = feasibility_limits(3, 3.0)
        np.testing.assert_allclose(lims, [1.0, 1.0, 1.0])
        lims5 = feasibility_limits(5, 1.0)
        np.testing.assert_allclose(lims5, [0.2, 0.25, 1 / 3, 1 / 3, 1 / 3])


class TestMuBounds:
    def test_small_argument_limit(self):
        # z -> 0 lower bound tends to rho / (2v + 1)
        rho = 1.0
        lower, _ = mu_bounds([1e7, 2e7, 3e7], rho)
        np.testing.assert_allclose(lower, rho / 7.0, rtol=1e-5)

    def test_upper_is_rho_third_for_small_v(self):
        for v in (1, 2, 3):
            _, upper = mu_bounds(np.linspace(0.5, 2.0, v), 1.5)
            np.testing.assert_allclose(upper, 0.5)

    def test_containment_on_random_spectra(self):
        for seed in range(6):
            lam = sample_spectrum(WishartConfig(5), RngStream(seed))
            for rho in (0.4, 1.1, 3.0):
                mu = truncate_spectrum(lam, rho).mu
                lower, upper = mu_bounds(lam, rho)
                assert np.all(mu >= lower - 1e-12)
                assert np.all(mu <= upper + 1e-12)
