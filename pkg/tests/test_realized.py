"""Tests for realized-kernel covariances, correlations and realized weights."""

import math
from datetime import date

import numpy as np
import pandas as pd
import pytest

from dcw._exceptions import (
    DegenerateVarianceError,
    DomainError,
    EmptyInputError,
    InsufficientDataError,
    LagOutOfRangeError,
    ParseError,
    SingularMatrixError,
)
from dcw._market_data import BinnedReturnPanel, ReturnPanel, TickSeries
from dcw._realized import (
    BandwidthResult,
    CovarianceMatrix,
    CovMatrixSeries,
    autocov_gamma,
    bandwidth,
    build_cov_series,
    ensure_invertible,
    load_cov_series,
    parzen_weight,
    realized_correlation,
    realized_kernel,
    realized_weight_series,
    realized_weights,
    realized_weights_quadutil,
    save_cov_series,
)

DAY = date(2015, 6, 1)


def _panel(returns, tickers=None):
    r = np.asarray(returns, dtype=float)
    if r.ndim == 1:
        r = r[:, None]
    tickers = tickers or tuple(f"S{i}" for i in range(r.shape[1]))
    return ReturnPanel(day=DAY, tickers=tuple(tickers), returns=r)


def _binned(returns, tickers=None):
    r = np.asarray(returns, dtype=float)
    if r.ndim == 1:
        r = r[:, None]
    tickers = tickers or tuple(f"S{i}" for i in range(r.shape[1]))
    return BinnedReturnPanel(day=DAY, tickers=tuple(tickers), returns=r, width_minutes=15)


def _matrix(values):
    return CovarianceMatrix.from_values(DAY, np.asarray(values, dtype=float))


class TestParzenWeight:
    """Test the Parzen kernel."""

    @pytest.mark.parametrize("x,expected", [(0.0, 1.0), (0.5, 0.25), (1.0, 0.0), (1.7, 0.0)])
    def test_values(self, x, expected):
        """Test normalization, continuity at 1/2 and support."""
        assert parzen_weight(x) == pytest.approx(expected, abs=1e-15)

    def test_even(self):
        """Test k(-x) = k(x)."""
        assert parzen_weight(-0.3) == parzen_weight(0.3)

    def test_monotone_on_support(self):
        """Test the kernel is non-increasing on [0, 1]."""
        values = [parzen_weight(x) for x in np.linspace(0, 1, 101)]
        assert all(b <= a + 1e-15 for a, b in zip(values, values[1:]))


class TestBandwidth:
    """Test bandwidth selection."""

    def test_zero_returns_give_zero_bandwidth(self):
        """Test all-zero intraday returns give H = 0 and l = 0."""
        result = bandwidth(_panel(np.zeros(20)), _binned([0.1, -0.2]))

        assert result.bandwidth == 0.0
        assert result.lag == 0

    def test_unit_noise_ratio(self):
        """Test J=100 with noise ratio 1 gives H = 3.51 * 100^0.6 and l = 55."""
        # sum r^2 / (2J) = 0.5 and binned sum of squares = 0.5
        result = bandwidth(_panel(np.ones(100)), _binned([math.sqrt(0.5)]))

        assert result.bandwidth == pytest.approx(3.51 * 100**0.6)
        assert result.bandwidth == pytest.approx(55.63, abs=0.01)
        assert result.lag == 55

    def test_lag_clamped(self):
        """Test the lag bound never exceeds J - 1."""
        result = bandwidth(_panel(np.ones(4)), _binned([1e-6]))

        assert result.bandwidth > 3
        assert result.lag == 3

    def test_degenerate_binned_variance(self):
        """Test a zero binned sum of squares names the asset."""
        with pytest.raises(DegenerateVarianceError) as exc_info:
            bandwidth(
                _panel(np.ones((5, 2)), ("AAA", "BBB")),
                _binned([[0.1, 0.0], [0.2, 0.0]], ("AAA", "BBB")),
            )
        assert exc_info.value.asset == "BBB"

    def test_lag_consistency_enforced(self):
        """Test BandwidthResult rejects a lag that disagrees with H and J."""
        with pytest.raises(ValueError):
            BandwidthResult(bandwidth=4.2, lag=3, n_returns=10)


class TestAutocovGamma:
    """Test realized autocovariances."""

    def test_lag_one_scalar(self):
        """Test r = (1,2,3), h=1 gives 2*1 + 3*2 = 8."""
        panel = _panel([1.0, 2.0, 3.0])

        assert autocov_gamma(panel, 1)[0, 0] == 8.0
        assert autocov_gamma(panel, -1)[0, 0] == 8.0

    def test_lag_zero_is_outer_sum(self, rng):
        """Test Gamma_0 is the sum of outer products."""
        r = rng.normal(size=(30, 3))
        gamma = autocov_gamma(_panel(r), 0)

        assert np.allclose(gamma, sum(np.outer(row, row) for row in r))
        assert np.allclose(gamma, gamma.T)

    def test_negative_lag_is_transpose(self, rng):
        """Test Gamma_{-h} = Gamma_h'."""
        panel = _panel(rng.normal(size=(20, 2)))

        assert np.array_equal(autocov_gamma(panel, -2), autocov_gamma(panel, 2).T)

    def test_out_of_range(self):
        """Test |h| >= J is rejected."""
        with pytest.raises(LagOutOfRangeError):
            autocov_gamma(_panel([1.0, 2.0, 3.0]), 3)


class TestRealizedKernel:
    """Test the realized-kernel estimator."""

    def test_forced_bandwidth_matches_direct_sum(self):
        """Test H=1.5 on r=(0.01,-0.02,0.01) equals Gamma_0 + 2 k(2/3) Gamma_1."""
        r = np.array([0.01, -0.02, 0.01])
        gamma0 = float(np.sum(r * r))
        gamma1 = float(np.sum(r[1:] * r[:-1]))
        expected = gamma0 + 2 * parzen_weight(1 / 1.5) * gamma1

        result = realized_kernel(_panel(r), _binned([0.01]), bandwidth_override=1.5)

        assert result.values[0, 0] == pytest.approx(expected, rel=1e-14)

    def test_zero_lag_is_gamma_zero(self, rng):
        """Test l = 0 leaves S = Gamma_0."""
        r = rng.normal(size=(10, 2))
        result = realized_kernel(_panel(r), _binned(np.ones((3, 2))), bandwidth_override=0.5)

        assert np.allclose(result.values, r.T @ r)

    def test_symmetric(self, rng):
        """Test the estimate equals its transpose."""
        r = rng.normal(size=(200, 4))
        result = realized_kernel(_panel(r), _binned(rng.normal(size=(26, 4))))

        assert np.max(np.abs(result.values - result.values.T)) <= 1e-15

    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_matches_double_loop(self, rng, m):
        """Test S equals sum_h k(h/H) sum_j r_j r_{j-h}' computed term by term."""
        for _ in range(10):
            n = int(rng.integers(2, 21))
            r = rng.normal(scale=0.01, size=(n, m))
            h_star = float(rng.uniform(0.5, 8.0))
            lag = min(math.floor(h_star), n - 1)

            expected = np.zeros((m, m))
            for h in range(-lag, lag + 1):
                weight = 1.0 if h == 0 else parzen_weight(abs(h) / h_star)
                for j in range(n):
                    if 0 <= j - h < n:
                        expected += weight * np.outer(r[j], r[j - h])

            result = realized_kernel(_panel(r), _binned(np.ones((3, m))), bandwidth_override=h_star)

            assert np.allclose(result.values, expected, rtol=1e-12, atol=1e-18)

    def test_too_few_returns(self):
        """Test J < 2 raises InsufficientDataError."""
        with pytest.raises(InsufficientDataError):
            realized_kernel(_panel([0.01]), _binned([0.01]))


class TestEnsureInvertible:
    """Test ridge repair."""

    def test_identity_unchanged(self):
        """Test a well-conditioned matrix is returned as is."""
        mat = _matrix(np.eye(3))
        repaired = ensure_invertible(mat)

        assert repaired is mat
        assert repaired.ridge is None
        assert not repaired.needs_repair

    def test_rank_one_repaired(self):
        """Test vv' with ridge 1e-6 gets smallest eigenvalue 1e-6 * trace / M."""
        v = np.array([1.0, 2.0])
        mat = _matrix(np.outer(v, v))
        assert mat.needs_repair

        repaired = ensure_invertible(mat, ridge=1e-6)
        smallest = np.linalg.eigvalsh(repaired.values)[0]

        assert smallest == pytest.approx(1e-6 * 5.0 / 2, rel=1e-6)
        assert repaired.ridge == 1e-6
        assert not repaired.needs_repair

    def test_zero_matrix_repaired(self):
        """Test the zero matrix is shifted by the ridge itself."""
        repaired = ensure_invertible(_matrix(np.zeros((2, 2))), ridge=1e-4)

        assert np.allclose(repaired.values, 1e-4 * np.eye(2))


class TestCovarianceMatrix:
    """Test matrix validation."""

    def test_asymmetric_rejected(self):
        """Test an asymmetric matrix fails validation."""
        with pytest.raises(ValueError):
            CovarianceMatrix(day=DAY, values=np.array([[1.0, 0.5], [0.0, 1.0]]), psd=True)

    def test_false_psd_flag_rejected(self):
        """Test psd=True on an indefinite matrix fails validation."""
        with pytest.raises(ValueError):
            CovarianceMatrix(day=DAY, values=np.array([[1.0, 2.0], [2.0, 1.0]]), psd=True)

    def test_from_values_flags_indefinite(self):
        """Test from_values marks an indefinite matrix as non-psd and repairable."""
        mat = _matrix([[1.0, 2.0], [2.0, 1.0]])

        assert not mat.psd
        assert mat.needs_repair

    def test_series_rejects_unsorted_dates(self):
        """Test a series must have increasing dates."""
        a = CovarianceMatrix.from_values(date(2015, 6, 2), np.eye(2))
        b = CovarianceMatrix.from_values(date(2015, 6, 1), np.eye(2))
        with pytest.raises(ValueError):
            CovMatrixSeries(tickers=("A", "B"), matrices=(a, b))


class TestRealizedCorrelation:
    """Test correlation extraction."""

    def test_two_by_two(self):
        """Test [[1,0.5],[0.5,4]] gives off-diagonal 0.25."""
        corr = realized_correlation(_matrix([[1.0, 0.5], [0.5, 4.0]]))

        assert corr.kind == "correlation"
        assert np.allclose(corr.values, [[1.0, 0.25], [0.25, 1.0]])

    def test_diagonal_gives_identity(self):
        """Test a diagonal covariance has identity correlation."""
        assert np.array_equal(realized_correlation(_matrix(np.diag([2.0, 3.0, 5.0]))).values, np.eye(3))

    def test_unit_diagonal_exact(self, make_pd):
        """Test the diagonal is exactly one."""
        corr = realized_correlation(_matrix(make_pd(5, 7.0)))

        assert np.all(np.diag(corr.values) == 1.0)
        assert np.all(np.abs(corr.values) <= 1.0)

    def test_entries_bounded_for_random_psd(self, rng):
        """Test full-rank and rank-deficient psd inputs give entries in [-1, 1]."""
        for _ in range(200):
            m = int(rng.integers(2, 7))
            x = rng.normal(size=(m, int(rng.integers(1, m + 2))))
            corr = realized_correlation(_matrix(x @ x.T)).values

            assert np.all(corr >= -1.0) and np.all(corr <= 1.0)
            assert np.all(np.diag(corr) == 1.0)

    def test_nonpositive_variance(self):
        """Test a zero variance is a domain error."""
        with pytest.raises(DomainError):
            realized_correlation(_matrix([[0.0, 0.0], [0.0, 1.0]]))


class TestRealizedWeights:
    """Test realized minimum-variance weights."""

    @pytest.mark.parametrize(
        "values,expected",
        [
            (np.eye(2), [0.5, 0.5]),
            (np.diag([1.0, 3.0]), [0.75, 0.25]),
            ([[1.0, 0.8], [0.8, 0.7]], [-1.0, 2.0]),
        ],
    )
    def test_closed_forms(self, values, expected):
        """Test hand-computed minimum-variance weights."""
        assert realized_weights(_matrix(values)) == pytest.approx(expected, abs=1e-12)

    def test_sum_to_one(self, make_pd):
        """Test the weights sum to one."""
        assert realized_weights(_matrix(make_pd(6))).sum() == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("c", [1e-4, 0.3, 7.0, 1e4])
    def test_scale_invariant(self, make_pd, c):
        """Test scaling S by c leaves the weights unchanged."""
        s = make_pd(5)

        assert np.allclose(realized_weights(_matrix(c * s)), realized_weights(_matrix(s)), rtol=1e-10, atol=1e-12)

    def test_minimizes_variance_on_budget_hyperplane(self, rng, make_pd):
        """Test nu'S nu <= w'S w for 1000 random w with sum(w) = 1."""
        s = make_pd(4)
        nu = realized_weights(_matrix(s))
        best = float(nu @ s @ nu)

        steps = rng.normal(size=(1000, 4))
        steps -= steps.mean(axis=1, keepdims=True)
        others = nu + steps * rng.uniform(1e-3, 2.0, size=(1000, 1))
        variances = np.einsum("ki,ij,kj->k", others, s, others)

        assert np.allclose(others.sum(axis=1), 1.0)
        assert np.all(variances >= best - 1e-12 * best)

    def test_singular(self):
        """Test a singular matrix raises SingularMatrixError."""
        with pytest.raises(SingularMatrixError):
            realized_weights(_matrix(np.ones((2, 2))))

    def test_series_repairs_before_solving(self):
        """Test realized_weight_series ridges a singular day instead of failing."""
        series = CovMatrixSeries(
            tickers=("A", "B"),
            matrices=(
                CovarianceMatrix.from_values(date(2015, 6, 1), np.ones((2, 2))),
                CovarianceMatrix.from_values(date(2015, 6, 2), np.diag([1.0, 3.0])),
            ),
        )
        nu = realized_weight_series(series)

        assert nu.weights[0] == pytest.approx([0.5, 0.5])
        assert nu.weights[1] == pytest.approx([0.75, 0.25])


class TestQuadraticUtilityWeights:
    """Test the quadratic-utility variant."""

    @pytest.mark.parametrize(
        "values,r,gamma,expected",
        [
            (np.eye(2), [0.02, 0.04], 2.0, [0.01, 0.02]),
            (np.diag([2.0, 4.0]), [0.02, 0.04], 1.0, [0.01, 0.01]),
            (np.eye(2), [0.0, 0.0], 3.0, [0.0, 0.0]),
        ],
    )
    def test_closed_forms(self, values, r, gamma, expected):
        """Test gamma^-1 S^-1 r on diagonal matrices."""
        assert realized_weights_quadutil(_matrix(values), np.array(r), gamma) == pytest.approx(expected)

    def test_gamma_must_be_positive(self):
        """Test gamma <= 0 is a domain error."""
        with pytest.raises(DomainError):
            realized_weights_quadutil(_matrix(np.eye(2)), np.zeros(2), 0.0)


def _day_ticks(day, rng, tickers=("AAA", "BBB"), n=400):
    open_ns = pd.Timestamp(f"{day.isoformat()}T13:30:00Z").value
    times, names, prices = [], [], []
    for k, ticker in enumerate(tickers):
        offsets = np.sort(rng.choice(23_400, size=n, replace=False)).astype(np.int64)
        times.extend(open_ns + offsets * 1_000_000_000 + k)
        names.extend([ticker] * n)
        prices.extend(50.0 * np.exp(np.cumsum(rng.normal(0, 1e-3, n))))
    return times, names, prices


class TestBuildCovSeries:
    """Test the tick-to-covariance pipeline."""

    def test_two_days(self, rng):
        """Test one positive definite matrix per day in percent units."""
        times, names, prices = [], [], []
        for day in (date(2015, 6, 1), date(2015, 6, 2)):
            t, n, p = _day_ticks(day, rng)
            times += t
            names += n
            prices += p
        series = build_cov_series(TickSeries.from_arrays(times, names, prices), ["AAA", "BBB"])

        assert series.dates == [date(2015, 6, 1), date(2015, 6, 2)]
        for mat in series.matrices:
            assert mat.psd
            # 400 returns of 0.1% per asset is roughly 4 squared percent
            assert 0.5 < mat.values[0, 0] < 20

    def test_day_without_second_asset_skipped(self, rng, caplog):
        """Test a day on which an asset never trades is skipped with a warning."""
        t1, n1, p1 = _day_ticks(date(2015, 6, 1), rng)
        t2, n2, p2 = _day_ticks(date(2015, 6, 2), rng, tickers=("AAA",))
        ticks = TickSeries.from_arrays(t1 + t2, n1 + n2, p1 + p2)
        series = build_cov_series(ticks, ["AAA", "BBB"], threads=2)

        assert series.dates == [date(2015, 6, 1)]
        assert "Skipping 2015-06-02" in caplog.text

    def test_no_usable_day(self, rng):
        """Test EmptyInputError when every day is skipped."""
        t, n, p = _day_ticks(date(2015, 6, 1), rng, tickers=("AAA",))
        with pytest.raises(EmptyInputError):
            build_cov_series(TickSeries.from_arrays(t, n, p), ["AAA", "BBB"])


class TestCovSeriesPersistence:
    """Test the long-format covariance CSV."""

    def test_reload_preserves_values(self, tmp_path, cov_series_factory):
        """Test save then load reproduces every matrix exactly."""
        series = cov_series_factory(4)
        path = tmp_path / "cov.csv"
        save_cov_series(series, path)
        loaded = load_cov_series(path, series.tickers)

        assert loaded.tickers == series.tickers
        assert loaded.dates == series.dates
        assert np.array_equal(loaded.stack(), series.stack())
        assert path.read_text().startswith("# assets: AAA,BBB,CCC\n")

    def test_ticker_mismatch(self, tmp_path, cov_series_factory):
        """Test a different expected ordering is a parse error."""
        path = tmp_path / "cov.csv"
        save_cov_series(cov_series_factory(2), path)
        with pytest.raises(ParseError):
            load_cov_series(path, ("CCC", "BBB", "AAA"))

    def test_missing_assets_line(self, tmp_path):
        """Test a file without the assets header is rejected on line 1."""
        path = tmp_path / "cov.csv"
        path.write_text("date,i,j,value\n2015-06-01,0,0,1.0\n")
        with pytest.raises(ParseError) as exc_info:
            load_cov_series(path)
        assert exc_info.value.line == 1

    def test_lower_triangle_rejected(self, tmp_path):
        """Test an (i, j) pair below the diagonal is rejected."""
        path = tmp_path / "cov.csv"
        path.write_text("# assets: A,B\ndate,i,j,value\n2015-06-01,1,0,1.0\n")
        with pytest.raises(ParseError) as exc_info:
            load_cov_series(path)
        assert exc_info.value.line == 3

    def test_missing_cell_rejected(self, tmp_path):
        """Test a day without its (1,1) variance is rejected at that day's first row."""
        path = tmp_path / "cov.csv"
        path.write_text(
            "# assets: A,B\ndate,i,j,value\n"
            "2015-06-01,0,0,1.0\n2015-06-01,0,1,0.2\n2015-06-01,1,1,2.0\n"
            "2015-06-02,0,0,1.0\n2015-06-02,0,1,0.2\n"
        )
        with pytest.raises(ParseError, match="2 of 3") as exc_info:
            load_cov_series(path)
        assert exc_info.value.line == 6

    def test_repeated_cell_rejected(self, tmp_path):
        """Test a cell listed twice on one day is rejected at the repeat."""
        path = tmp_path / "cov.csv"
        path.write_text(
            "# assets: A,B\ndate,i,j,value\n"
            "2015-06-01,0,0,1.0\n2015-06-01,0,0,1.5\n2015-06-01,1,1,2.0\n"
        )
        with pytest.raises(ParseError, match="repeated") as exc_info:
            load_cov_series(path)
        assert exc_info.value.line == 4

    def test_non_finite_value_rejected(self, tmp_path):
        """Test a NaN entry is rejected."""
        path = tmp_path / "cov.csv"
        path.write_text("# assets: A\ndate,i,j,value\n2015-06-01,0,0,nan\n")
        with pytest.raises(ParseError, match="finite") as exc_info:
            load_cov_series(path)
        assert exc_info.value.line == 3
