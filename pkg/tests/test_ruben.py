import math

import numpy as np
import pytest

from spheretrunc.ensembles import RngStream, WishartConfig, sample_spectrum
from spheretrunc.oracles import generating_function, taylor_coefficients
from spheretrunc.ruben import (
    ConvergenceError,
    RubenEvaluator,
    choose_scale,
    coeffs_alpha,
    coeffs_alpha_jk,
    coeffs_alpha_k,
    eval_integrals,
    k_threshold,
    residual_bound,
)
from spheretrunc.specfun import chi_square_cdf


def random_spectrum(seed, v):
    return sample_spectrum(WishartConfig(v), RngStream(seed))


class TestChooseScale:
    def test_isotropic(self):
        assert choose_scale([2.5, 2.5, 2.5]) == pytest.approx(2.5, rel=1e-15)

    def test_two_values(self):
        assert choose_scale([1.0, 3.0]) == pytest.approx(1.5, rel=1e-15)

    def test_hand_case_and_eta(self):
        lam = [0.5, 1.0, 2.0]
        s = choose_scale(lam)
        assert s == pytest.approx(0.8, rel=1e-15)
        eta = max(abs(1 - s / x) for x in lam)
        assert eta == pytest.approx(0.6, rel=1e-14)
        assert eta < 1.0

    def test_eta_below_one_always(self):
        for seed in range(10):
            lam = random_spectrum(seed, 7)
            s = choose_scale(lam)
            assert max(abs(1 - s / x) for x in lam) < 1.0


class TestCoefficients:
    def test_isotropic_alpha(self):
        c = coeffs_alpha([2.0, 2.0, 2.0], 2.0, 5)
        np.testing.assert_allclose(c, [1, 0, 0, 0, 0], atol=1e-15)

    def test_hand_recursion_alpha(self):
        c = coeffs_alpha([1.0, 3.0], 1.5, 3)
        assert c[0] == pytest.approx(math.sqrt(0.75), rel=1e-14)
        assert c[1] == pytest.approx(0.0, abs=1e-15)
        assert c[2] == pytest.approx(0.25 * 0.5 * math.sqrt(0.75), rel=1e-13)

    def test_hand_recursion_alpha_k(self):
        c = coeffs_alpha_k([1.0, 3.0], 1.5, 0, 2)
        assert c[0] == pytest.approx(1.5 * math.sqrt(0.75), rel=1e-14)
        # g_{k;1} = 3(1-1.5) + (1-0.5) = -1, so c_{k;1} = -c_{k;0}/2
        assert c[1] == pytest.approx(-0.75 * math.sqrt(0.75), rel=1e-13)

    def test_isotropic_alpha_k_and_jk(self):
        ck = coeffs_alpha_k([1.5] * 4, 1.5, 2, 4)
        np.testing.assert_allclose(ck, [1, 0, 0, 0], atol=1e-15)
        ckk = coeffs_alpha_jk([1.5] * 4, 1.5, 1, 1, 4)
        np.testing.assert_allclose(ckk, [3, 0, 0, 0], atol=1e-15)
        cjk = coeffs_alpha_jk([1.5] * 4, 1.5, 0, 3, 4)
        np.testing.assert_allclose(cjk, [1, 0, 0, 0], atol=1e-15)

    def test_sum_bounded_by_one(self):
        # the full series sums to alpha(rho -> inf) = 1
        for seed in range(5):
            lam = random_spectrum(seed, 5)
            c = coeffs_alpha(lam, choose_scale(lam), 120)
            assert c.sum() <= 1.0 + 1e-10

    def test_v2_partial_sums_monotone(self):
        # with two eigenvalues the odd power sums vanish and every
        # coefficient is nonnegative, so partial sums rise toward 1
        c = coeffs_alpha([0.4, 2.9], choose_scale([0.4, 2.9]), 60)
        assert np.all(c >= -1e-15)
        partial = np.cumsum(c)
        assert np.all(np.diff(partial) >= -1e-15)
        assert partial[-1] <= 1.0 + 1e-12

    @pytest.mark.parametrize("kind,index", [
        ("alpha", ()),
        ("alpha_k", (0,)),
        ("alpha_k", (2,)),
        ("alpha_jk", (1, 1)),
        ("alpha_jk", (0, 2)),
    ])
    def test_generating_function_oracle(self, kind, index):
        lam = random_spectrum(42, 3)
        s = choose_scale(lam)
        ev = RubenEvaluator(lam)
        got = ev.coefficients(kind, index, 7)
        psi = generating_function(lam, s, kind, index)
        radius = 0.5 / max(abs(1 - s / x) for x in lam)
        want = taylor_coefficients(psi, 7, min(radius, 0.5))
        np.testing.assert_allclose(got, want, atol=1e-8)


class TestResidualBound:
    def test_isotropic_zero(self):
        ev = RubenEvaluator([1.0, 1.0, 1.0])
        assert ev.residual_bound(2.0, 1) == 0.0
        assert ev.residual_bound(2.0, 10) == 0.0

    def test_eventually_decreasing(self):
        ev = RubenEvaluator([0.5, 1.0, 2.0])
        rho = 1.0
        n0 = max(2, int(ev.eta * rho / ev.s) + 2)
        vals = [ev.residual_bound(rho, n) for n in range(n0, n0 + 30)]
        assert all(b <= a for a, b in zip(vals, vals[1:]))

    def test_consistent_with_k_threshold(self):
        ev = RubenEvaluator([0.5, 1.0, 2.0], epsilon=1e-14)
        kth = ev.k_threshold(1.0)
        assert ev.residual_bound(1.0, kth) < 1e-14
        if kth > 1:
            assert ev.residual_bound(1.0, kth - 1) >= 1e-14

    def test_series_object_round_trip(self):
        ev = RubenEvaluator([0.5, 1.0, 2.0])
        series = ev.ruben_series(1.0, "alpha_k", 1)
        assert series.k_th == ev.k_threshold(1.0, "alpha_k", 1)
        assert residual_bound(series, 1.0, series.k_th) < series.epsilon
        assert series.c[0] > 0.0

    def test_bounds_the_actual_tail(self):
        # the certified bound must dominate the observed discarded tail
        ev = RubenEvaluator([0.3, 0.9, 1.4, 2.2], epsilon=1e-10)
        rho = 2.0
        for kind, index in [("alpha", ()), ("alpha_k", (0,)), ("alpha_jk", (0, 3))]:
            n = ev.k_threshold(rho, kind, index)
            short = ev.series_sum(rho, kind, index, n_terms=n)
            long = ev.series_sum(rho, kind, index, n_terms=n + 300)
            assert abs(long - short) <= ev.residual_bound(rho, n, kind, index) + 1e-15


class TestKThreshold:
    def test_isotropic(self):
        assert k_threshold([1.0, 1.0], 5.0) == 1
        assert k_threshold([2.0], 0.3, epsilon=1e-10) == 1

    def test_monotone_in_rho(self):
        lam = random_spectrum(1, 6)
        ev = RubenEvaluator(lam)
        ks = [ev.k_threshold(rho) for rho in (0.1, 0.5, 1.0, 3.0, 10.0)]
        assert all(b >= a for a, b in zip(ks, ks[1:]))

    def test_convergence_error_on_cap(self):
        # eta extremely close to 1 with a huge radius exhausts the cap
        with pytest.raises(ConvergenceError):
            RubenEvaluator([1e-9, 1.0], epsilon=1e-14).k_threshold(1e6)


class TestEvalIntegrals:
    def test_isotropic_reduction(self):
        ints = eval_integrals([2.0, 2.0, 2.0], 2.0)
        assert ints.alpha == pytest.approx(chi_square_cdf(3, 1.0), abs=1e-14)
        np.testing.assert_allclose(ints.alpha_k, chi_square_cdf(5, 1.0), atol=1e-14)
        assert ints.alpha_jk[0, 0] == pytest.approx(3 * chi_square_cdf(7, 1.0), abs=1e-14)
        assert ints.alpha_jk[0, 1] == pytest.approx(chi_square_cdf(7, 1.0), abs=1e-14)

    def test_one_dimensional_erf(self):
        ints = eval_integrals([1.0], 4.0, want="alpha")
        assert ints.alpha == pytest.approx(math.erf(math.sqrt(2.0)), abs=1e-14)

    def test_positivity_and_ordering(self):
        for seed in range(6):
            lam = random_spectrum(seed, 4)
            for rho in (0.2, 1.0, 4.0):
                ints = eval_integrals(lam, rho)
                assert 0.0 < ints.alpha <= 1.0
                assert np.all(ints.alpha_k > 0.0)
                assert np.all(ints.alpha_k < ints.alpha)
                assert np.all(ints.alpha_jk > 0.0)
                np.testing.assert_array_equal(ints.alpha_jk, ints.alpha_jk.T)

    def test_epsilon_consistency(self):
        lam = random_spectrum(9, 5)
        a_loose = eval_integrals(lam, 1.3, epsilon=1e-10)
        a_tight = eval_integrals(lam, 1.3, epsilon=1e-14)
        assert abs(a_loose.alpha - a_tight.alpha) <= 1e-10
        assert np.abs(a_loose.alpha_k - a_tight.alpha_k).max() <= 1e-10
        assert np.abs(a_loose.alpha_jk - a_tight.alpha_jk).max() <= 1e-10

    def test_exchange_symmetry(self):
        rng = np.random.default_rng(5)
        for _ in range(4):
            lam = np.sort(rng.gamma(2.0, 0.5, 5)) + 0.05
            i, j = sorted(rng.choice(5, size=2, replace=False))
            swapped = lam.copy()
            swapped[[i, j]] = swapped[[j, i]]
            a = eval_integrals(lam, 1.1, want="alpha_and_k")
            b = eval_integrals(swapped, 1.1, want="alpha_and_k")
            assert b.alpha == pytest.approx(a.alpha, abs=1e-12)
            assert b.alpha_k[j] == pytest.approx(a.alpha_k[i], abs=1e-12)

    def test_full_sum_reaches_one(self):
        lam = [0.6, 1.0, 1.7]
        rho = 300.0 * max(lam)
        assert eval_integrals(lam, rho, want="alpha").alpha == pytest.approx(1.0, abs=1e-12)

    def test_want_levels(self):
        lam = [0.5, 1.5]
        a = eval_integrals(lam, 1.0, want="alpha")
        assert a.alpha_k is None and a.alpha_jk is None
        b = eval_integrals(lam, 1.0, want="alpha_and_k")
        assert b.alpha_jk is None and b.alpha_k is not None
        with pytest.raises(ValueError):
            eval_integrals(lam, 1.0, want="everything")

    def test_evaluator_reuse_across_radii(self):
        lam = random_spectrum(21, 4)
        ev = RubenEvaluator(lam)
        for rho in (3.0, 0.4, 1.2, 6.0):  # mixed order exercises cache growth
            cached = ev.integrals(rho)
            fresh = RubenEvaluator(lam).integrals(rho)
            assert cached.alpha == fresh.alpha
            np.testing.assert_array_equal(cached.alpha_k, fresh.alpha_k)
            np.testing.assert_array_equal(cached.alpha_jk, fresh.alpha_jk)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            eval_integrals([1.0, -2.0], 1.0)
        with pytest.raises(ValueError):
            eval_integrals([1.0, 2.0], -1.0)
        with pytest.raises(ValueError):
            eval_integrals([], 1.0)
