"""Tests for the HAR, DCC, RW, Naive and DCW forecasters."""

from datetime import date

import numpy as np
import pytest
from scipy.signal import lfilter

from dcw._allocation import min_variance
from dcw._exceptions import (
    DegenerateNormalizationError,
    DomainError,
    FitError,
    InsufficientDataError,
    ParseError,
)
from dcw._forecast import (
    HAR_LAGS,
    DccParams,
    DccState,
    DcwParams,
    HarParams,
    ModelParams,
    dcc_covariance,
    dcc_fit,
    dcc_fit_with_trace,
    dcc_forecast,
    dcc_objective,
    dcc_target,
    dcw_fit,
    dcw_fit_with_trace,
    dcw_fitted_series,
    dcw_forecast,
    har_design,
    har_fit,
    har_forecast,
    naive_weights,
    rw_forecast,
    summarize_cross_section,
    vt_forecast,
)
from dcw._labeled_enum import Strategy
from dcw._realized import CovarianceMatrix
from dcw._synthetic import equicorrelation, simulate_dcc_correlations

DAY = date(2015, 6, 1)


def _har_params(*alphas, tickers=("AAA",)):
    return HarParams(tickers=tickers, coefficients=[list(alphas)] * len(tickers))


def _simulate_har(alpha, n, rng, noise=0.1, burn=2_000):
    """Simulate the HAR recursion as its AR(22) representation."""
    a0, a1, a2, a3 = alpha
    phi = np.full(HAR_LAGS, a3 / HAR_LAGS)
    phi[:5] += a2 / 5
    phi[0] += a1
    shocks = a0 + noise * rng.standard_normal(n + burn)
    path = lfilter([1.0], np.concatenate([[1.0], -phi]), shocks)
    return path[burn:]


def _simulate_dcw(a, b, target, n, rng, noise=0.05):
    """nu_t = omega_t + eps_t with omega_t following the targeted DCW recursion."""
    nu = np.empty(n)
    omega = target
    for t in range(n):
        nu[t] = omega + noise * rng.standard_normal()
        omega = (1 - a - b) * target + a * nu[t] + b * omega
    return nu


class TestHarFit:
    """Test HAR estimation."""

    def test_design_regressors(self):
        """Test the daily, weekly and monthly regressors of the first usable row."""
        series = np.arange(1.0, 31.0)
        response, design = har_design(series)

        assert response[0] == 23.0
        assert design[0].tolist() == pytest.approx([1.0, 22.0, 20.0, 11.5])
        assert len(response) == 30 - HAR_LAGS

    def test_constant_series_is_collinear(self):
        """Test a constant variance series raises FitError."""
        with pytest.raises(FitError, match="collinear"):
            har_fit(np.full((200, 1), 0.7), ["AAA"])

    def test_too_short(self):
        """Test fewer than 33 observations is insufficient."""
        with pytest.raises(InsufficientDataError):
            har_fit(np.ones((32, 2)), ["AAA", "BBB"])

    @pytest.mark.slow
    def test_monte_carlo_recovery(self, rng):
        """Test known coefficients are recovered within 0.05 from a long simulated path."""
        alpha = (0.1, 0.4, 0.3, 0.2)
        paths = np.column_stack([_simulate_har(alpha, 100_000, rng) for _ in range(2)])
        params = har_fit(paths, ["AAA", "BBB"], threads=2)

        for row in params.coefficients:
            assert row == pytest.approx(alpha, abs=0.05)


class TestHarForecast:
    """Test one-step HAR forecasts."""

    def test_constant_only(self, rng):
        """Test alpha = (c, 0, 0, 0) forecasts c whatever the history."""
        forecast = har_forecast(_har_params(0.3, 0, 0, 0), rng.uniform(0, 5, (30, 1)))

        assert forecast.variances.tolist() == pytest.approx([0.3])

    def test_daily_pass_through(self):
        """Test alpha = (0, 1, 0, 0) returns the last variance."""
        history = np.ones((22, 1))
        history[-1] = 0.5

        assert har_forecast(_har_params(0, 1, 0, 0), history).variances[0] == pytest.approx(0.5)

    def test_flat_history(self):
        """Test a flat history at 1 gives 0.1 + 0.9."""
        forecast = har_forecast(_har_params(0.1, 0.4, 0.3, 0.2), np.ones((40, 1)))

        assert forecast.variances[0] == pytest.approx(1.0)

    def test_linear_in_history(self, rng):
        """Test f(x + y) = f(x) + f(y) and f(cx) = c f(x) without an intercept."""
        tickers = ("AAA", "BBB", "CCC")
        for _ in range(20):
            alphas = rng.uniform(0.0, 0.5, size=3)
            params = _har_params(0.0, *alphas, tickers=tickers)
            x = rng.uniform(0.1, 5.0, size=(22, 3))
            y = rng.uniform(0.1, 5.0, size=(22, 3))
            c = float(rng.uniform(0.1, 10.0))
            fx = har_forecast(params, x).variances

            assert har_forecast(params, x + y).variances == pytest.approx(fx + har_forecast(params, y).variances, rel=1e-12)
            assert har_forecast(params, c * x).variances == pytest.approx(c * fx, rel=1e-12)

    def test_intercept_enters_once(self, rng):
        """Test with alpha0 > 0 the forecast is affine: f(x + y) = f(x) + f(y) - alpha0."""
        params = _har_params(0.2, 0.4, 0.3, 0.1)
        x = rng.uniform(0.1, 5.0, size=(30, 1))
        y = rng.uniform(0.1, 5.0, size=(30, 1))
        total = har_forecast(params, x).variances + har_forecast(params, y).variances - 0.2

        assert har_forecast(params, x + y).variances == pytest.approx(total, rel=1e-12)

    def test_negative_forecast_floored(self):
        """Test a negative forecast is floored and reported."""
        forecast = har_forecast(
            _har_params(-1.0, 0, 0, 0, tickers=("AAA", "BBB")), np.ones((22, 2)), floor=1e-6
        )

        assert forecast.variances.tolist() == [1e-6, 1e-6]
        assert forecast.floored == (0, 1)

    def test_short_history(self):
        """Test fewer than 22 lags raises InsufficientDataError."""
        with pytest.raises(InsufficientDataError):
            har_forecast(_har_params(0, 1, 0, 0), np.ones((21, 1)))


class TestVolatilityTiming:
    """Test the diagonal VT covariance."""

    def test_diagonal(self):
        """Test sigma^2 = (1, 4) gives diag(1, 4) and weights (0.8, 0.2)."""
        forecast = vt_forecast(np.array([1.0, 4.0]), DAY)

        assert np.array_equal(forecast.values, np.diag([1.0, 4.0]))
        assert forecast.strategy is Strategy.VT
        assert min_variance(forecast).weights == pytest.approx([0.8, 0.2])

    def test_single_asset(self):
        """Test M = 1 gives a 1 x 1 matrix."""
        assert vt_forecast(np.array([2.5]), DAY).values.tolist() == [[2.5]]

    def test_nonpositive_variance(self):
        """Test a zero variance is a domain error."""
        with pytest.raises(DomainError):
            vt_forecast(np.array([1.0, 0.0]), DAY)


class TestDccFit:
    """Test DCC estimation."""

    def test_constant_correlations_give_origin(self):
        """Test P_t constant at P-bar makes (0, 0) optimal."""
        corr = equicorrelation(3, 0.25)
        params, trace = dcc_fit_with_trace(np.repeat(corr[None], 150, axis=0))

        assert (params.a, params.b) == (0.0, 0.0)
        assert np.allclose(params.target, corr)
        assert trace.method == "grid"
        assert trace.final == 0.0

    def test_too_short(self):
        """Test fewer than min_length matrices is insufficient."""
        with pytest.raises(InsufficientDataError):
            dcc_fit(np.repeat(np.eye(2)[None], 50, axis=0))

    def test_single_asset(self):
        """Test M = 1 has nothing to fit."""
        params = dcc_fit(np.ones((120, 1, 1)))

        assert (params.a, params.b) == (0.0, 0.0)

    def test_target_unit_diagonal(self, rng):
        """Test the target is the sample mean with an exact unit diagonal."""
        corrs = np.stack([equicorrelation(3, rho) for rho in rng.uniform(-0.2, 0.6, 20)])
        target = dcc_target(corrs)

        assert np.all(np.diag(target) == 1.0)
        assert target[0, 1] == pytest.approx(corrs[:, 0, 1].mean())

    def test_objective_at_origin(self, rng):
        """Test (0, 0) scores the squared Frobenius distance of every P_t from the target."""
        target = equicorrelation(3, 0.3)
        observed = np.stack([equicorrelation(3, rho) for rho in rng.uniform(-0.4, 0.9, 60)])
        expected = sum(np.sum((p - target) ** 2) for p in observed)

        assert dcc_objective(observed, target, 0.0, 0.0) == pytest.approx(expected)

    def test_trace_is_monotone(self, rng):
        """Test the best-so-far objective never increases."""
        _, sample, _ = simulate_dcc_correlations(200, equicorrelation(3, 0.3), 0.3, 0.9, 40, rng)
        _, trace = dcc_fit_with_trace(sample, grid_points=11)

        assert np.all(np.diff(trace.objectives) <= 0)

    @pytest.mark.slow
    def test_monte_carlo_recovery(self, rng):
        """Test (a, b) = (0.3, 0.9) is recovered within 0.05 from 3000 simulated days."""
        _, sample, _ = simulate_dcc_correlations(3_000, equicorrelation(5, 0.3), 0.3, 0.9, 78, rng)
        params = dcc_fit(sample)

        assert params.a == pytest.approx(0.3, abs=0.05)
        assert params.b == pytest.approx(0.9, abs=0.05)


class TestDccForecast:
    """Test the DCC correlation recursion and covariance assembly."""

    def test_zero_loadings_give_target(self):
        """Test a = b = 0 returns the target."""
        target = equicorrelation(3, 0.4)
        params = DccParams(a=0.0, b=0.0, target=target)
        state = DccState(prev_corr=np.eye(3), prev_realized=equicorrelation(3, -0.1))

        assert np.allclose(dcc_forecast(params, state), target)

    def test_identity_fixed_point(self):
        """Test P-bar = P_{t-1} = R_{t-1} = I stays at I."""
        params = DccParams(a=0.3, b=0.9, target=np.eye(2))

        assert np.array_equal(dcc_forecast(params, DccState(prev_corr=np.eye(2), prev_realized=np.eye(2))), np.eye(2))

    def test_hand_example(self):
        """Test a^2 = 0.04, b^2 = 0.81 with P_{t-1} off-diagonal 0.5 gives 0.02."""
        params = DccParams(a=0.2, b=0.9, target=np.eye(2))
        state = DccState(prev_corr=np.eye(2), prev_realized=equicorrelation(2, 0.5))
        corr = dcc_forecast(params, state)

        assert corr[0, 1] == pytest.approx(0.02)
        assert np.all(np.diag(corr) == 1.0)

    def test_nonstationary_rejected(self):
        """Test a^2 + b^2 >= 1 is rejected."""
        with pytest.raises(ValueError):
            DccParams(a=0.5, b=0.9, target=np.eye(2))

    @pytest.mark.parametrize("m,n_increments", [(2, 10), (4, 3), (5, 40)])
    def test_recursion_stays_correlation(self, rng, m, n_increments):
        """Test random paths keep a unit diagonal and a psd forecast, rank-deficient inputs included."""
        for _ in range(5):
            target = equicorrelation(m, float(rng.uniform(-0.8 / (m - 1), 0.8)))
            params = DccParams(a=float(rng.uniform(0.0, 0.5)), b=float(rng.uniform(0.0, 0.85)), target=target)
            _, realized, _ = simulate_dcc_correlations(100, target, 0.3, 0.9, n_increments, rng)
            corr = target
            for t in range(len(realized)):
                corr = dcc_forecast(params, DccState(prev_corr=corr, prev_realized=realized[t]))

                assert np.all(np.diag(corr) == 1.0)
                assert np.array_equal(corr, corr.T)
                assert np.linalg.eigvalsh(corr)[0] >= -1e-10

    def test_covariance_scaling(self):
        """Test sigma^2 = (1, 4) with correlation 0.5 gives covariance 1."""
        omega = dcc_covariance(equicorrelation(2, 0.5), np.array([1.0, 4.0]), DAY)

        assert omega.values[0, 1] == pytest.approx(1.0)
        assert np.diag(omega.values).tolist() == [1.0, 4.0]
        assert omega.strategy is Strategy.DCC

    def test_identity_correlation_is_diagonal(self):
        """Test R = I gives a diagonal covariance."""
        omega = dcc_covariance(np.eye(3), np.array([1.0, 2.0, 3.0]), DAY)

        assert np.array_equal(omega.values, np.diag([1.0, 2.0, 3.0]))


class TestRandomWalkAndNaive:
    """Test the RW and Naive forecasters."""

    def test_rw_is_identity(self, make_pd):
        """Test the RW forecast is yesterday's matrix."""
        prev = CovarianceMatrix.from_values(DAY, make_pd(4))
        forecast = rw_forecast(prev, date(2015, 6, 2))

        assert np.array_equal(forecast.values, prev.values)
        assert forecast.ridge is None

    def test_rw_repairs_singular(self):
        """Test a singular lagged matrix is ridged and the ridge recorded."""
        prev = CovarianceMatrix.from_values(DAY, np.ones((2, 2)))
        forecast = rw_forecast(prev, date(2015, 6, 2), ridge=1e-6)

        assert forecast.ridge == 1e-6
        assert np.linalg.eigvalsh(forecast.values)[0] > 0

    @pytest.mark.parametrize("m", [1, 4])
    def test_naive(self, m):
        """Test equal weights 1/M."""
        assert naive_weights(m, DAY).weights.tolist() == pytest.approx([1.0 / m] * m)

    def test_naive_requires_assets(self):
        """Test M = 0 is a domain error."""
        with pytest.raises(DomainError):
            naive_weights(0, DAY)


class TestDcwFit:
    """Test DCW estimation."""

    def test_constant_weights(self):
        """Test a constant nu series gives a = b = 0 with zero objective."""
        nu = np.full((128, 4), 0.25)
        params, traces = dcw_fit_with_trace(nu, ["A", "B", "C", "D"])

        assert params.a.tolist() == [0.0] * 4
        assert params.b.tolist() == [0.0] * 4
        assert all(t.final == 0.0 for t in traces)
        assert params.target.tolist() == [0.25] * 4

    def test_too_short(self):
        """Test fewer than min_length observations is insufficient."""
        with pytest.raises(InsufficientDataError):
            dcw_fit(np.full((99, 2), 0.5), ["A", "B"])

    def test_fitted_series_starts_at_seed(self, rng):
        """Test the in-sample path starts at the target and follows the recursion."""
        nu = np.column_stack([_simulate_dcw(0.2, 0.7, 0.6, 300, rng)])
        nu = np.column_stack([nu[:, 0], 1.0 - nu[:, 0]])
        params = dcw_fit(nu, ["A", "B"])
        fitted = dcw_fitted_series(params, nu)

        assert fitted.shape == nu.shape
        assert fitted[0] == pytest.approx(params.seed)
        a, b, t = params.a[0], params.b[0], params.target[0]
        assert fitted[5, 0] == pytest.approx((1 - a - b) * t + a * nu[4, 0] + b * fitted[4, 0])

    def test_mirrored_assets_share_coefficients(self, rng):
        """Test two assets with nu_2 = 1 - nu_1 get the same (a, b)."""
        first = _simulate_dcw(0.2, 0.7, 0.6, 400, rng)
        params = dcw_fit(np.column_stack([first, 1.0 - first]), ["A", "B"], threads=2)

        assert params.a[0] == pytest.approx(params.a[1], abs=1e-4)
        assert params.b[0] == pytest.approx(params.b[1], abs=1e-4)
        assert abs(params.target.sum() - 1.0) <= 1e-12

    @pytest.mark.slow
    def test_monte_carlo_recovery(self, rng):
        """Test a = 0.17, b = 0.78 is recovered within 0.05 from 5000 simulated days."""
        first = _simulate_dcw(0.17, 0.78, 0.6, 5_000, rng)
        params = dcw_fit(np.column_stack([first, 1.0 - first]), ["A", "B"])

        assert params.a == pytest.approx([0.17, 0.17], abs=0.05)
        assert params.b == pytest.approx([0.78, 0.78], abs=0.05)


class TestDcwForecast:
    """Test the one-step DCW recursion."""

    @staticmethod
    def _params(a, b, target):
        m = len(target)
        return DcwParams(
            tickers=tuple(f"S{i}" for i in range(m)), a=a, b=b, target=target, seed=target
        )

    def test_zero_coefficients_give_target(self):
        """Test a = b = 0 forecasts the target."""
        params = self._params([0.0, 0.0], [0.0, 0.0], [0.6, 0.4])
        forecast = dcw_forecast(params, np.array([0.9, 0.1]), np.array([0.2, 0.8]), DAY)

        assert forecast.weights == pytest.approx([0.6, 0.4])

    def test_fixed_point(self):
        """Test nu_{t-1} = omega_{t-1} = target is a fixed point."""
        params = self._params([0.3, 0.1], [0.6, 0.8], [0.7, 0.3])
        target = np.array([0.7, 0.3])

        assert dcw_forecast(params, target, target, DAY).weights == pytest.approx(target)

    def test_hand_example(self):
        """Test the two-asset recursion gives raw (0.57, 0.43) with divisor 1."""
        params = self._params([0.2, 0.2], [0.7, 0.7], [0.6, 0.4])
        forecast = dcw_forecast(params, np.array([0.8, 0.2]), np.array([0.5, 0.5]), DAY)

        assert forecast.raw == pytest.approx([0.57, 0.43])
        assert forecast.divisor == pytest.approx(1.0)
        assert forecast.weights == pytest.approx([0.57, 0.43])
        assert forecast.strategy is Strategy.DCW

    def test_unequal_coefficients_normalized(self):
        """Test raw forecasts off the simplex are divided by their sum."""
        params = self._params([0.5, 0.0], [0.0, 0.0], [0.5, 0.5])
        forecast = dcw_forecast(params, np.array([1.0, 0.0]), np.array([0.5, 0.5]), DAY)

        assert forecast.raw == pytest.approx([0.75, 0.5])
        assert forecast.weights == pytest.approx([0.6, 0.4])

    @pytest.mark.parametrize("m", [2, 5, 10])
    def test_equal_coefficients_keep_raw_sum(self, rng, m):
        """Test equal a and b across assets keep the fed-back raw forecast on the simplex."""
        for _ in range(5):
            b = float(rng.uniform(0.0, 0.95))
            a = float(rng.uniform(0.0, 1.0 - b))
            target = rng.normal(size=m)
            target += 1.0 / m - target.mean()
            params = self._params(np.full(m, a), np.full(m, b), target)
            omega = params.seed
            for _ in range(200):
                nu = rng.normal(scale=0.5, size=m)
                nu += 1.0 / m - nu.mean()
                forecast = dcw_forecast(params, nu, omega, DAY)

                assert abs(forecast.raw.sum() - 1.0) <= 1e-12
                omega = forecast.raw

    def test_degenerate_normalization(self):
        """Test a raw sum near zero raises DegenerateNormalizationError."""
        params = self._params([1.0, 1.0], [0.0, 0.0], [0.5, 0.5])
        with pytest.raises(DegenerateNormalizationError):
            dcw_forecast(params, np.array([2.0, -2.0]), np.array([0.5, 0.5]), DAY)

    def test_target_must_sum_to_one(self):
        """Test DcwParams rejects a target off the simplex."""
        with pytest.raises(ValueError):
            self._params([0.1, 0.1], [0.5, 0.5], [0.6, 0.6])


class TestModelParamsText:
    """Test the key=value parameter files."""

    def test_round_trip_exact(self):
        """Test every float survives to_text and from_text bit for bit."""
        params = ModelParams(
            strategy=Strategy.DCC,
            window="2005-2009_2010",
            tickers=("AAA", "BBB"),
            har=HarParams(tickers=("AAA", "BBB"), coefficients=[[0.1, 0.2, 0.3, 1 / 3], [0.0, 0.5, 0.25, 0.125]]),
            dcc=DccParams(a=0.123456789, b=0.9, target=equicorrelation(2, 0.3)),
        )
        loaded = ModelParams.from_text(params.to_text())

        assert loaded.strategy is Strategy.DCC
        assert np.array_equal(loaded.har.coefficients, params.har.coefficients)
        assert loaded.dcc.a == params.dcc.a
        assert np.array_equal(loaded.dcc.target, params.dcc.target)
        assert loaded.dcw is None

    def test_dcw_keys(self):
        """Test DCW parameters are written per ticker."""
        dcw = DcwParams(tickers=("AAA", "BBB"), a=[0.1, 0.2], b=[0.7, 0.8], target=[0.4, 0.6], seed=[0.4, 0.6])
        text = ModelParams(strategy=Strategy.DCW, window="w", tickers=("AAA", "BBB"), dcw=dcw).to_text()

        assert "dcw.b.BBB=0.8\n" in text
        assert ModelParams.from_text(text).dcw.a.tolist() == [0.1, 0.2]

    def test_missing_key(self):
        """Test a missing required key is a parse error."""
        with pytest.raises(ParseError, match="missing key"):
            ModelParams.from_text("strategy=DCW\ntickers=AAA\n")

    def test_malformed_line(self):
        """Test a line without '=' is rejected with its number."""
        with pytest.raises(ParseError) as exc_info:
            ModelParams.from_text("strategy=DCW\nwindow\n")
        assert exc_info.value.line == 2


class TestSummarizeCrossSection:
    """Test per-asset parameter summaries."""

    def test_statistics(self):
        """Test mean, extremes and median of a small cross-section."""
        summary = summarize_cross_section([0.1, 0.2, 0.3, np.nan])

        assert summary.count == 3
        assert summary.mean == pytest.approx(0.2)
        assert summary.median == pytest.approx(0.2)
        assert (summary.min, summary.max) == (0.1, 0.3)

    def test_empty(self):
        """Test no finite values is a domain error."""
        with pytest.raises(DomainError):
            summarize_cross_section([np.nan])
