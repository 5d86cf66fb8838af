"""Special-function kernels against independent oracles."""

import math

import mpmath
import numpy as np
import pytest
import scipy.special as sps
import scipy.stats

from onebitdet import specfun


def erf_maclaurin(x, terms=20):
    """Maclaurin series of erf, the oracle for the half-shape incomplete
    gamma value."""
    total = 0.0
    for n in range(terms):
        total += (-1) ** n * x ** (2 * n + 1) / (math.factorial(n) * (2 * n + 1))
    return 2.0 / math.sqrt(math.pi) * total


def chisq1_quantile_bisect(p):
    """Oracle quantile: plain bisection on the incomplete gamma CDF."""
    lo, hi = 0.0, 200.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if specfun.reg_lower_inc_gamma(0.5, mid / 2.0) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestLogGamma:
    def test_at_one(self):
        assert specfun.log_gamma(1.0) == 0.0

    def test_at_half(self):
        assert specfun.log_gamma(0.5) == pytest.approx(0.5 * math.log(math.pi), abs=1e-15)

    def test_doubled_near_gamma_minimum(self):
        assert 2.0 * specfun.log_gamma(1.461) == pytest.approx(-0.2430, abs=1e-3)

    def test_recurrence(self):
        for x in np.linspace(0.05, 50.0, 201):
            lhs = specfun.log_gamma(x + 1.0)
            rhs = specfun.log_gamma(x) + math.log(x)
            assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)

    def test_relative_error_against_scipy(self):
        for x in np.logspace(math.log10(0.05), math.log10(50.0), 120):
            ref = sps.gammaln(x)
            assert specfun.log_gamma(float(x)) == pytest.approx(ref, rel=1e-12, abs=1e-13)

    @pytest.mark.parametrize("bad", [0.0, -1.0, math.nan, math.inf])
    def test_domain_errors(self, bad):
        with pytest.raises(ValueError):
            specfun.log_gamma(bad)


class TestRegLowerIncGamma:
    @pytest.mark.parametrize("x", [0.0, 1.0, 3.0])
    def test_unit_shape_is_exponential_cdf(self, x):
        assert specfun.reg_lower_inc_gamma(1.0, x) == pytest.approx(
            1.0 - math.exp(-x), abs=1e-14
        )

    def test_half_shape_at_one_equals_erf_one(self):
        oracle = erf_maclaurin(1.0, terms=20)
        assert oracle == pytest.approx(0.8427007929, abs=1e-9)
        assert specfun.reg_lower_inc_gamma(0.5, 1.0) == pytest.approx(oracle, abs=1e-12)

    @pytest.mark.parametrize("s", [0.1, 0.37, 0.5, 1.0, 2.5, 10.0])
    def test_zero_is_zero(self, s):
        assert specfun.reg_lower_inc_gamma(s, 0.0) == 0.0

    @pytest.mark.parametrize("s", [0.12, 0.36, 1.0, 3.0, 17.0])
    def test_monotone_and_saturating(self, s):
        xs = np.linspace(0.0, 50.0 * s, 400)
        vals = specfun.reg_lower_inc_gamma(s, xs)
        assert np.all(np.diff(vals) >= -1e-15)
        assert vals[-1] > 0.99

    def test_against_scipy_grid(self):
        rng = np.random.default_rng(2024)
        for _ in range(300):
            s = float(np.exp(rng.uniform(np.log(0.05), np.log(30.0))))
            x = float(rng.uniform(0.0, 5.0 * (s + 1.0)))
            assert specfun.reg_lower_inc_gamma(s, x) == pytest.approx(
                float(sps.gammainc(s, x)), abs=1e-12
            )

    def test_pair_is_complementary(self):
        xs = np.linspace(0.0, 30.0, 100)
        p, q = specfun.reg_gamma_pair(0.73, xs)
        assert np.allclose(p + q, 1.0, atol=1e-14)

    def test_log_upper_tracks_linear(self):
        for x in (0.5, 2.0, 10.0, 40.0):
            assert specfun.log_reg_upper_inc_gamma(0.5, x) == pytest.approx(
                math.log(specfun.reg_upper_inc_gamma(0.5, x)), rel=1e-12
            )
        # far past linear underflow the log form stays finite
        assert specfun.log_reg_upper_inc_gamma(0.5, 800.0) < -700.0
        assert math.isfinite(specfun.log_reg_upper_inc_gamma(0.5, 800.0))

    @pytest.mark.parametrize("s,x", [(0.0, 1.0), (-1.0, 1.0), (1.0, -0.5), (1.0, math.nan)])
    def test_domain_errors(self, s, x):
        with pytest.raises(ValueError):
            specfun.reg_lower_inc_gamma(s, x)


class TestGaussianTail:
    def test_at_zero(self):
        assert specfun.gaussian_tail(0.0) == 0.5

    def test_symmetry(self):
        for x in np.linspace(-4.0, 4.0, 41):
            total = specfun.gaussian_tail(float(x)) + specfun.gaussian_tail(float(-x))
            assert total == pytest.approx(1.0, abs=1e-15)

    def test_five_percent_point_by_quadrature(self):
        x = 1.6448536
        phi = lambda t: mpmath.exp(-t * t / 2) / mpmath.sqrt(2 * mpmath.pi)
        oracle = float(0.5 - mpmath.quad(phi, [0, x]))
        assert oracle == pytest.approx(0.05, abs=1e-7)
        assert specfun.gaussian_tail(x) == pytest.approx(oracle, abs=1e-13)

    def test_deep_tail(self):
        assert 0.0 <= specfun.gaussian_tail(40.0) < 1e-300

    def test_domain_error(self):
        with pytest.raises(ValueError):
            specfun.gaussian_tail(math.inf)


class TestNoncentralChisq1:
    def test_central_five_percent(self):
        gamma = chisq1_quantile_bisect(0.95)
        assert gamma == pytest.approx(3.841459, abs=1e-5)
        assert specfun.noncentral_chisq1_sf(3.841459, 0.0) == pytest.approx(0.05, abs=1e-7)

    @pytest.mark.parametrize("lam", [0.0, 0.5, 3.0, 25.0])
    def test_zero_threshold_is_certain(self, lam):
        assert specfun.noncentral_chisq1_sf(0.0, lam) == 1.0

    def test_monotone_in_noncentrality(self):
        gamma = 2.5
        vals = [specfun.noncentral_chisq1_sf(gamma, lam) for lam in np.linspace(0.0, 20.0, 41)]
        assert np.all(np.diff(vals) > 0.0)

    def test_against_scipy_ncx2(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            gamma = float(rng.uniform(0.01, 30.0))
            lam = float(rng.uniform(0.0, 30.0))
            ref = float(scipy.stats.ncx2.sf(gamma, 1, lam)) if lam > 0 else float(
                scipy.stats.chi2.sf(gamma, 1)
            )
            assert specfun.noncentral_chisq1_sf(gamma, lam) == pytest.approx(
                ref, rel=1e-9, abs=1e-12
            )

    @pytest.mark.parametrize("t,lam", [(-1.0, 0.0), (1.0, -0.1), (math.nan, 0.0)])
    def test_domain_errors(self, t, lam):
        with pytest.raises(ValueError):
            specfun.noncentral_chisq1_sf(t, lam)


class TestChisq1Quantile:
    @pytest.mark.parametrize(
        "p,expected", [(0.5, 0.4549364), (0.95, 3.841459)]
    )
    def test_against_bisection_oracle(self, p, expected):
        oracle = chisq1_quantile_bisect(p)
        assert oracle == pytest.approx(expected, abs=2e-6)
        assert specfun.chisq1_quantile(p) == pytest.approx(oracle, abs=1e-9)

    def test_residual_probability(self):
        for p in (1e-6, 0.01, 0.3, 0.5, 0.9, 0.999, 1 - 1e-9):
            g = specfun.chisq1_quantile(p)
            assert specfun.reg_lower_inc_gamma(0.5, g / 2.0) == pytest.approx(p, abs=1e-10)

    @pytest.mark.parametrize("gamma", [0.1, 1.0, 5.0])
    def test_round_trip_with_sf(self, gamma):
        p = 1.0 - specfun.noncentral_chisq1_sf(gamma, 0.0)
        assert specfun.chisq1_quantile(p) == pytest.approx(gamma, abs=1e-8)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.2, 1.3, math.nan])
    def test_domain_errors(self, p):
        with pytest.raises(ValueError):
            specfun.chisq1_quantile(p)


def test_two_routes_to_central_law_agree():
    # erfc-based survival vs series/continued-fraction incomplete gamma
    for gamma in np.logspace(-3, np.log10(40.0), 60):
        total = specfun.noncentral_chisq1_sf(float(gamma), 0.0) + specfun.reg_lower_inc_gamma(
            0.5, float(gamma) / 2.0
        )
        assert total == pytest.approx(1.0, abs=1e-10)
