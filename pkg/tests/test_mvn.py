"""Tests for the multivariate-normal engine."""

import math

import numpy as np
import pytest

from garma import (
    AllConditionedError,
    CondOnMissingError,
    DimensionMismatchError,
    InvalidParamError,
    NotPositiveDefiniteError,
    ToleranceNotReachedError,
    build_pattern,
    mvn,
)
from conftest import brute_conditional

AR1_COV2 = np.array([[4 / 3, 2 / 3], [2 / 3, 4 / 3]])


def equicorr(m, rho):
    cov = np.full((m, m), rho)
    np.fill_diagonal(cov, 1.0)
    return cov


class TestCholesky:
    def test_identity(self):
        assert np.array_equal(mvn.cholesky(np.eye(3)), np.eye(3))

    def test_hand_factor(self):
        cov = np.array([[4.0, 2.0], [2.0, 5.0]])
        factor = mvn.cholesky(cov)
        assert np.array_equal(factor, [[2.0, 0.0], [1.0, 2.0]])

    def test_round_trip(self):
        factor = mvn.cholesky(AR1_COV2)
        assert np.allclose(factor @ factor.T, AR1_COV2, atol=1e-15)
        assert np.array_equal(np.triu(factor, 1), np.zeros((2, 2)))

    def test_inflation_rescues_near_singular(self):
        # Exactly singular within rounding; a tiny inflation must rescue it.
        cov = np.ones((2, 2))
        factor = mvn.cholesky(cov)
        assert np.allclose(factor @ factor.T, cov, atol=1e-7)

    def test_indefinite_rejected(self):
        with pytest.raises(NotPositiveDefiniteError):
            mvn.cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_asymmetric_rejected(self):
        with pytest.raises(InvalidParamError):
            mvn.cholesky(np.array([[1.0, 0.5], [0.1, 1.0]]))

    def test_non_square_rejected(self):
        with pytest.raises(DimensionMismatchError):
            mvn.cholesky(np.ones((2, 3)))


class TestLogDensity:
    def test_standard_normal_at_zero(self):
        params = mvn.GaussianParams(mean=[0.0], cov=[[1.0]])
        assert mvn.log_density([0.0], params) == pytest.approx(
            -0.9189385332046727, abs=1e-15
        )

    def test_independent_coordinates_add(self):
        params = mvn.GaussianParams(mean=np.zeros(3), cov=np.diag([1.0, 4.0, 0.25]))
        x = np.array([0.3, -1.0, 0.2])
        expected = sum(
            -0.5 * math.log(2 * math.pi * v) - 0.5 * xi**2 / v
            for xi, v in zip(x, [1.0, 4.0, 0.25])
        )
        assert mvn.log_density(x, params) == pytest.approx(expected, abs=1e-13)

    def test_explicit_inverse_oracle(self):
        phi = 0.5
        lags = phi ** np.abs(np.subtract.outer(range(3), range(3))) / (1 - phi**2)
        params = mvn.GaussianParams(mean=np.full(3, 0.7), cov=lags)
        x = np.array([1.0, -0.5, 0.3])
        diff = x - 0.7
        inv = np.linalg.inv(lags)
        expected = (
            -1.5 * math.log(2 * math.pi)
            - 0.5 * math.log(np.linalg.det(lags))
            - 0.5 * diff @ inv @ diff
        )
        assert mvn.log_density(x, params) == pytest.approx(expected, abs=1e-12)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(5)
        cov = equicorr(4, 0.3)
        params = mvn.GaussianParams(mean=rng.normal(size=4), cov=cov)
        rows = rng.normal(size=(6, 4))
        batch = mvn.log_density(rows, params)
        singles = [mvn.log_density(row, params) for row in rows]
        assert np.allclose(batch, singles, rtol=1e-13, atol=0.0)

    def test_dimension_mismatch(self):
        params = mvn.GaussianParams(mean=[0.0, 0.0], cov=np.eye(2))
        with pytest.raises(DimensionMismatchError):
            mvn.log_density([0.0, 0.0, 0.0], params)

    def test_log_space_survives_m30(self):
        # Dimension 30 underflows the natural density scale; the log value
        # must stay finite.
        params = mvn.GaussianParams(mean=np.zeros(30), cov=np.eye(30))
        x = np.full(30, 8.0)
        value = mvn.log_density(x, params)
        assert np.isfinite(value)
        assert math.exp(value) == 0.0  # plain density underflows
        assert value == pytest.approx(30 * (-0.5 * math.log(2 * math.pi) - 32.0))


class TestConditionalMoments:
    def test_ar1_closed_form(self):
        params = mvn.GaussianParams(mean=[0.0, 0.0], cov=AR1_COV2)
        pattern = build_pattern(condvals=[2.0, np.nan])
        cm = mvn.conditional_moments(params, pattern)
        assert cm.cond_mean == pytest.approx([1.0], abs=1e-12)
        assert cm.cond_cov[0, 0] == pytest.approx(1.0, abs=1e-12)

    def test_empty_pattern_returns_inputs_exactly(self):
        params = mvn.GaussianParams(mean=[0.5, -0.5], cov=AR1_COV2)
        pattern = build_pattern(condvals=[np.nan, np.nan])
        cm = mvn.conditional_moments(params, pattern)
        assert np.array_equal(cm.cond_mean, params.mean)
        assert np.array_equal(cm.cond_cov, params.cov)

    def test_brute_force_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            m = int(rng.integers(3, 7))
            a = rng.normal(size=(m, m))
            cov = a @ a.T + 0.5 * np.eye(m)
            mean = rng.normal(size=m)
            k = int(rng.integers(1, m))
            cond_idx = np.sort(rng.choice(m, size=k, replace=False))
            free_idx = np.setdiff1d(np.arange(m), cond_idx)
            values = rng.normal(size=k)
            condvals = np.full(m, np.nan)
            condvals[cond_idx] = values
            params = mvn.GaussianParams(mean=mean, cov=cov)
            cm = mvn.conditional_moments(params, build_pattern(condvals=condvals))
            omean, ocov = brute_conditional(mean, cov, free_idx, cond_idx, values)
            assert np.allclose(cm.cond_mean, omean, atol=1e-10)
            assert np.allclose(cm.cond_cov, ocov, atol=1e-10)

    def test_marginalise_drops_rows(self):
        cov = equicorr(4, 0.5)
        params = mvn.GaussianParams(mean=np.arange(4.0), cov=cov)
        pattern = build_pattern(missing=[False, True, False, True])
        cm = mvn.conditional_moments(params, pattern)
        assert np.array_equal(cm.cond_mean, [0.0, 2.0])
        assert np.array_equal(cm.cond_cov, cov[np.ix_([0, 2], [0, 2])])

    def test_values_supplied_separately(self):
        params = mvn.GaussianParams(mean=[0.0, 0.0], cov=AR1_COV2)
        pattern = build_pattern(missing=[False, False], cond_flags=[True, False])
        cm = mvn.conditional_moments(params, pattern, values=[2.0])
        assert cm.cond_mean == pytest.approx([1.0], abs=1e-12)

    def test_unbound_pattern_without_values_errors(self):
        params = mvn.GaussianParams(mean=[0.0, 0.0], cov=AR1_COV2)
        pattern = build_pattern(missing=[False, False], cond_flags=[True, False])
        with pytest.raises(CondOnMissingError):
            mvn.conditional_moments(params, pattern)

    def test_all_conditioned_errors(self):
        params = mvn.GaussianParams(mean=[0.0, 0.0], cov=AR1_COV2)
        with pytest.raises(AllConditionedError):
            mvn.conditional_moments(params, build_pattern(condvals=[1.0, 2.0]))

    def test_chain_rule(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            m = int(rng.integers(2, 6))
            a = rng.normal(size=(m, m))
            cov = a @ a.T + 0.3 * np.eye(m)
            mean = rng.normal(size=m)
            params = mvn.GaussianParams(mean=mean, cov=cov)
            x = rng.normal(size=m)
            k = int(rng.integers(1, m))
            condvals = np.full(m, np.nan)
            condvals[:k] = x[:k]
            cm = mvn.conditional_moments(params, build_pattern(condvals=condvals))
            log_cond = mvn.log_density(
                x[k:], mvn.GaussianParams(mean=cm.cond_mean, cov=cm.cond_cov)
            )
            log_marg = mvn.log_density(
                x[:k], mvn.GaussianParams(mean=mean[:k], cov=cov[:k, :k])
            )
            log_full = mvn.log_density(x, params)
            assert log_full == pytest.approx(log_cond + log_marg, abs=1e-9)


class TestMvnCdf:
    def test_univariate_median(self):
        params = mvn.GaussianParams(mean=[0.0], cov=[[1.0]])
        result = mvn.mvn_cdf([0.0], params)
        assert result.value == 0.5
        assert result.method == "closed_form_1d"

    def test_univariate_shifted_scaled(self):
        params = mvn.GaussianParams(mean=[3.0], cov=[[4.0]])
        result = mvn.mvn_cdf([5.0], params)
        from scipy.special import ndtr

        assert result.value == pytest.approx(float(ndtr(1.0)), abs=1e-15)

    def test_bivariate_independent_orthant(self):
        params = mvn.GaussianParams(mean=[0.0, 0.0], cov=np.eye(2))
        result = mvn.mvn_cdf([0.0, 0.0], params)
        assert result.value == pytest.approx(0.25, abs=1e-12)
        assert result.method == "quadrature_2d"

    def test_bivariate_half_correlation_orthant(self):
        # P(X <= 0, Y <= 0) with correlation 1/2 is exactly 1/3.
        params = mvn.GaussianParams(mean=[0.0, 0.0], cov=equicorr(2, 0.5))
        result = mvn.mvn_cdf([0.0, 0.0], params)
        assert result.value == pytest.approx(1 / 3, abs=1e-10)

    @pytest.mark.parametrize("rho", [-0.95, -0.5, -0.1, 0.0, 0.3, 0.8, 0.93, 0.999])
    def test_bivariate_vs_qmc(self, rho):
        cov3 = equicorr(2, rho)
        params = mvn.GaussianParams(mean=[0.0, 0.0], cov=cov3)
        upper = [0.4, -0.7]
        quad = mvn.mvn_cdf(upper, params)
        # An independent estimate from the 3-and-higher path: embed in 3-D
        # with a third, unconstrained coordinate.
        cov_embedded = np.eye(3)
        cov_embedded[:2, :2] = cov3
        qmc_result = mvn.mvn_cdf(
            upper + [np.inf], mvn.GaussianParams(mean=np.zeros(3), cov=cov_embedded)
        )
        assert qmc_result.method == "quadrature_2d"  # inf dropped, back to 2-D
        embedded = np.eye(3) * 1e-8
        embedded[:2, :2] = cov3
        loose = mvn.mvn_cdf(
            upper + [40.0], mvn.GaussianParams(mean=np.zeros(3), cov=embedded),
            tol=2e-6, seed=3,
        )
        assert loose.method == "qmc"
        assert quad.value == pytest.approx(loose.value, abs=2e-5)

    def test_bivariate_symmetry(self):
        params = mvn.GaussianParams(mean=[0.0, 0.0], cov=equicorr(2, 0.7))
        a = mvn.mvn_cdf([0.3, -1.2], params)
        b = mvn.mvn_cdf([-1.2, 0.3], params)
        assert a.value == pytest.approx(b.value, abs=1e-14)

    def test_trivariate_equicorrelated_orthant(self):
        # For correlation 1/2 in any dimension the orthant probability is
        # 1/(m+1); here 1/4.
        params = mvn.GaussianParams(mean=np.zeros(3), cov=equicorr(3, 0.5))
        result = mvn.mvn_cdf([0.0, 0.0, 0.0], params, tol=1e-5, seed=17)
        assert result.method == "qmc"
        assert result.error_estimate <= 1e-5
        assert result.value == pytest.approx(0.25, abs=6e-5)

    def test_trivariate_independent(self):
        params = mvn.GaussianParams(mean=np.zeros(3), cov=np.eye(3))
        result = mvn.mvn_cdf([0.0, 0.0, 0.0], params, tol=1e-5, seed=23)
        assert result.value == pytest.approx(0.125, abs=6e-5)

    def test_qmc_deterministic_given_seed(self):
        params = mvn.GaussianParams(mean=np.zeros(4), cov=equicorr(4, 0.3))
        a = mvn.mvn_cdf([0.5, -0.2, 1.0, 0.0], params, seed=99)
        b = mvn.mvn_cdf([0.5, -0.2, 1.0, 0.0], params, seed=99)
        assert a.value == b.value
        assert a.error_estimate == b.error_estimate

    def test_default_seed_is_fixed(self):
        params = mvn.GaussianParams(mean=np.zeros(3), cov=equicorr(3, 0.5))
        a = mvn.mvn_cdf([0.1, 0.2, 0.3], params)
        b = mvn.mvn_cdf([0.1, 0.2, 0.3], params)
        assert a.value == b.value

    def test_monotone_in_upper(self):
        params = mvn.GaussianParams(mean=np.zeros(3), cov=equicorr(3, 0.4))
        lo = mvn.mvn_cdf([0.0, 0.0, 0.0], params, seed=1)
        hi = mvn.mvn_cdf([0.5, 0.0, 0.0], params, seed=1)
        assert hi.value > lo.value

    def test_all_infinite_upper(self):
        params = mvn.GaussianParams(mean=np.zeros(3), cov=equicorr(3, 0.5))
        assert mvn.mvn_cdf([np.inf] * 3, params).value == 1.0

    def test_minus_infinity_gives_zero(self):
        params = mvn.GaussianParams(mean=np.zeros(2), cov=np.eye(2))
        assert mvn.mvn_cdf([0.0, -np.inf], params).value == 0.0

    def test_far_tails(self):
        params = mvn.GaussianParams(mean=np.zeros(3), cov=equicorr(3, 0.2))
        low = mvn.mvn_cdf([-40.0] * 3, params, seed=2)
        high = mvn.mvn_cdf([40.0] * 3, params, seed=2)
        assert low.value <= 1e-12
        assert high.value >= 1.0 - 1e-12

    def test_nan_upper_rejected(self):
        params = mvn.GaussianParams(mean=np.zeros(2), cov=np.eye(2))
        with pytest.raises(InvalidParamError):
            mvn.mvn_cdf([0.0, np.nan], params)

    def test_tolerance_not_reached(self):
        params = mvn.GaussianParams(mean=np.zeros(5), cov=equicorr(5, 0.5))
        with pytest.raises(ToleranceNotReachedError) as info:
            mvn.mvn_cdf([0.0] * 5, params, tol=1e-12, seed=3, max_points=50_000)
        assert 0.0 <= info.value.best_estimate <= 1.0
        assert info.value.error_estimate > 1e-12


class TestSample:
    def test_shape_and_determinism(self):
        params = mvn.GaussianParams(mean=np.zeros(3), cov=equicorr(3, 0.5))
        a = mvn.sample(params, 10, seed=7)
        b = mvn.sample(params, 10, seed=7)
        assert a.shape == (10, 3)
        assert np.array_equal(a, b)

    def test_zero_count(self):
        params = mvn.GaussianParams(mean=[0.0], cov=[[1.0]])
        assert mvn.sample(params, 0, seed=1).shape == (0, 1)

    def test_moments_match(self):
        cov = np.array([[2.0, 0.6, 0.2], [0.6, 1.0, -0.3], [0.2, -0.3, 0.5]])
        mean = np.array([1.0, -2.0, 0.5])
        params = mvn.GaussianParams(mean=mean, cov=cov)
        draws = mvn.sample(params, 200_000, seed=12345)
        n = draws.shape[0]
        se_mean = np.sqrt(np.diag(cov) / n)
        assert np.all(np.abs(draws.mean(axis=0) - mean) <= 4 * se_mean)
        sample_cov = np.cov(draws.T)
        se_cov = np.sqrt(
            (np.outer(np.diag(cov), np.diag(cov)) + cov**2) / n
        )
        assert np.all(np.abs(sample_cov - cov) <= 4 * se_cov)

    def test_bad_count(self):
        params = mvn.GaussianParams(mean=[0.0], cov=[[1.0]])
        with pytest.raises(InvalidParamError):
            mvn.sample(params, -1, seed=1)


class TestGaussianParams:
    def test_dimension_check(self):
        with pytest.raises(DimensionMismatchError):
            mvn.GaussianParams(mean=[0.0, 0.0], cov=np.eye(3))

    def test_asymmetric_cov_rejected(self):
        with pytest.raises(InvalidParamError):
            mvn.GaussianParams(mean=[0.0, 0.0], cov=[[1.0, 0.5], [0.2, 1.0]])

    def test_nonfinite_rejected(self):
        with pytest.raises(InvalidParamError):
            mvn.GaussianParams(mean=[np.nan], cov=[[1.0]])
