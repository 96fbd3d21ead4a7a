"""Rolling in-sample / out-of-sample backtest.

Each (window, strategy) cell fits its model on the in-sample days, then walks the
out-of-sample days forecasting day t from data dated t-1 or earlier, allocates
under every exposure bound the strategy is evaluated at and records a
StrategyRun per bound. Cells are independent and run through parallel_map;
results are reduced in input order so output never depends on scheduling.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from datetime import date
from pathlib import Path

import numpy as np
import pandas as pd

from dcw._allocation import ActiveSet, constrained_min_variance, project_weights
from dcw._base import DCWBaseModel, FloatArray, format_bound
from dcw._config import BacktestConfig
from dcw._evaluation import (
    DcwWindowSummary,
    PerformanceReport,
    R2Record,
    StrategyRun,
    build_report,
    is_r2,
    oos_r2,
)
from dcw._exceptions import ConfigError, DCWError, PipelineError
from dcw._forecast import (
    HAR_MIN_LENGTH,
    CovarianceForecast,
    DccState,
    ModelParams,
    dcc_covariance,
    dcc_fit,
    dcc_forecast,
    dcw_fit,
    dcw_fitted_series,
    dcw_forecast,
    har_fit,
    har_forecast,
    naive_weights,
    rw_forecast,
    summarize_cross_section,
    vt_forecast,
)
from dcw._labeled_enum import Strategy
from dcw._market_data import (
    DailyBarPanel,
    clean_ticks_with_report,
    load_asset_meta,
    load_daily_bars,
    load_ticks,
)
from dcw._realized import (
    CovMatrixSeries,
    RealizedWeightSeries,
    build_cov_series,
    load_cov_series,
    realized_correlation,
    realized_weight_series,
    save_cov_series,
)
from dcw._report import emit_reports
from dcw._utils import parallel_map

logger = logging.getLogger(__name__)


class Window(DCWBaseModel):
    """One in-sample period and the out-of-sample period that follows it."""

    label: str
    is_dates: tuple[date, ...]
    oos_dates: tuple[date, ...]


def rolling_windows(dates: Sequence[date], is_years: int = 5, oos_years: int = 1) -> list[Window]:
    """Split dates into calendar-year windows advancing by the OOS length.

    Window k uses years [k*oos, k*oos + is) in sample and the following oos years
    out of sample. Only windows with a complete OOS period are returned.
    """
    years = sorted({d.year for d in dates})
    windows = []
    start = 0
    while start + is_years + oos_years <= len(years):
        is_span = years[start : start + is_years]
        oos_span = years[start + is_years : start + is_years + oos_years]
        oos_label = str(oos_span[0]) if len(oos_span) == 1 else f"{oos_span[0]}-{oos_span[-1]}"
        windows.append(
            Window(
                label=f"{is_span[0]}-{is_span[-1]}_{oos_label}",
                is_dates=tuple(d for d in dates if d.year in is_span),
                oos_dates=tuple(d for d in dates if d.year in oos_span),
            )
        )
        start += oos_years
    return windows


class BacktestInputs(DCWBaseModel):
    """Realized matrices and derived series shared by every cell.

    Attributes:
        series: Realized covariance matrices as estimated (used for evaluation)
        weights: Realized weights nu_t (computed from repaired matrices)
        variances: T x M realized variances (diagonals)
        correlations: T x M x M realized correlations
        bars: Daily open-close returns, if configured
        sectors: Ticker to sector map
        repaired_days: Days whose matrix needed a ridge repair
    """

    series: CovMatrixSeries
    weights: RealizedWeightSeries
    variances: FloatArray
    correlations: FloatArray
    bars: DailyBarPanel | None = None
    sectors: dict[str, str]
    repaired_days: int = 0

    @property
    def tickers(self) -> tuple[str, ...]:
        """Asset ordering."""
        return self.series.tickers

    def positions(self, dates: Sequence[date]) -> list[int]:
        """Indices of dates in the series."""
        index = {d: i for i, d in enumerate(self.series.dates)}
        return [index[d] for d in dates]


def _load_covariances(cfg: BacktestConfig, from_cov: Path | None, threads: int) -> tuple[CovMatrixSeries, bool]:
    if from_cov is not None:
        return load_cov_series(from_cov, cfg.assets), False
    if cfg.ticks_path is not None:
        session = cfg.clean.session
        ticks = load_ticks(cfg.ticks_path, session)
        cleaned, report = clean_ticks_with_report(ticks, cfg.clean, threads)
        logger.info("Cleaning removed %d of %d ticks", report.total_removed, len(ticks))
        return build_cov_series(cleaned, cfg.assets, cfg.realized, session, threads), True
    if cfg.cov_path is not None:
        return load_cov_series(cfg.cov_path, cfg.assets), False
    raise ConfigError("one of ticks_path or cov_path is required", "ticks_path")


def prepare_inputs(
    cfg: BacktestConfig, from_cov: Path | str | None = None, threads: int = 1
) -> tuple[BacktestInputs, bool]:
    """Load or estimate the realized matrices and the data every cell shares.

    Returns:
        Tuple of (inputs, whether the matrices were estimated from ticks)
    """
    series, estimated = _load_covariances(cfg, Path(from_cov) if from_cov else None, threads)
    weights = realized_weight_series(series, cfg.realized.ridge)
    stack = series.stack()
    correlations = np.stack([realized_correlation(m).values for m in series.matrices])
    bars = load_daily_bars(cfg.bars_path, cfg.assets) if cfg.bars_path is not None else None
    sectors = dict(cfg.sectors)
    if cfg.meta_path is not None:
        for meta in load_asset_meta(cfg.meta_path):
            sectors.setdefault(meta.ticker, meta.sector)
    repaired = sum(m.needs_repair for m in series.matrices)
    if repaired:
        logger.info("%d of %d realized matrices need a ridge repair", repaired, len(series))
    inputs = BacktestInputs(
        series=series,
        weights=weights,
        variances=np.einsum("tii->ti", stack),
        correlations=correlations,
        bars=bars,
        sectors=sectors,
        repaired_days=repaired,
    )
    return inputs, estimated


class CellResult(DCWBaseModel):
    """Output of one (window, strategy) cell."""

    window: str
    strategy: Strategy
    runs: tuple[StrategyRun, ...]
    params: ModelParams | None = None
    r2: tuple[R2Record, ...] = ()
    dcw_summaries: tuple[DcwWindowSummary, ...] = ()
    floored_forecasts: int = 0


class _CellRunner:
    """Sequential forecast fold of one strategy over one window."""

    def __init__(self, inputs: BacktestInputs, window: Window, strategy: Strategy, cfg: BacktestConfig) -> None:
        self.inputs = inputs
        self.window = window
        self.strategy = strategy
        self.cfg = cfg
        self.is_pos = inputs.positions(window.is_dates)
        self.oos_pos = inputs.positions(window.oos_dates)
        self.ecs = cfg.ec_grid if strategy.uses_exposure_grid else (1.0,)
        self.day: date | None = None
        self.floored = 0

    def run(self) -> CellResult:
        try:
            return self._run()
        except DCWError as e:
            raise PipelineError(self.strategy.label, self.day, e) from e

    def _run(self) -> CellResult:
        logger.debug("Cell %s %s: %d OOS days", self.window.label, self.strategy.label, len(self.oos_pos))
        if self.strategy is Strategy.NAIVE:
            m = len(self.inputs.tickers)
            rows = [naive_weights(m, self.inputs.series.dates[t]).weights for t in self.oos_pos]
            return self._result({1.0: rows}, None)
        if self.strategy is Strategy.DCW:
            return self._run_dcw()
        return self._run_covariance()

    def _har_variances(self) -> tuple[ModelParams, list[np.ndarray]]:
        params = har_fit(self.inputs.variances[self.is_pos], self.inputs.tickers)
        out = []
        for t in self.oos_pos:
            self.day = self.inputs.series.dates[t]
            forecast = har_forecast(params, self.inputs.variances[:t], self.cfg.forecast.har_floor)
            self.floored += len(forecast.floored)
            out.append(np.asarray(forecast.variances))
        return ModelParams(strategy=self.strategy, window=self.window.label, tickers=self.inputs.tickers, har=params), out

    def _covariance_forecasts(self) -> tuple[ModelParams | None, list[CovarianceForecast]]:
        dates = self.inputs.series.dates
        if self.strategy is Strategy.RW:
            forecasts = []
            for t in self.oos_pos:
                self.day = dates[t]
                forecasts.append(rw_forecast(self.inputs.series.matrices[t - 1], dates[t], self.cfg.realized.ridge))
            return None, forecasts

        params, variances = self._har_variances()
        if self.strategy is Strategy.VT:
            return params, [vt_forecast(v, dates[t]) for v, t in zip(variances, self.oos_pos)]

        corrs = self.inputs.correlations
        self.day = None
        dcc = dcc_fit(corrs[self.is_pos], self.cfg.forecast.grid_points, self.cfg.forecast.min_fit_days)
        corr = dcc.target
        first = self.is_pos[0]
        forecasts = []
        oos = dict(zip(self.oos_pos, variances))
        for t in range(first + 1, self.oos_pos[-1] + 1):
            self.day = dates[t]
            corr = dcc_forecast(dcc, DccState(prev_corr=corr, prev_realized=corrs[t - 1]))
            if t in oos:
                forecasts.append(dcc_covariance(corr, oos[t], dates[t]))
        return params.model_copy(update={"dcc": dcc}), forecasts

    def _run_covariance(self) -> CellResult:
        params, forecasts = self._covariance_forecasts()
        rows: dict[float, list[np.ndarray]] = {ec: [] for ec in self.ecs}
        warm: dict[float, ActiveSet | None] = {ec: None for ec in self.ecs}
        for forecast in forecasts:
            self.day = forecast.day
            for ec in self.ecs:
                result = constrained_min_variance(forecast, ec, self.cfg.solver, warm[ec])
                warm[ec] = result.active_set
                rows[ec].append(np.asarray(result.weights))
        return self._result(rows, params)

    def _run_dcw(self) -> CellResult:
        nu = self.inputs.weights.weights
        dates = self.inputs.series.dates
        tickers = self.inputs.tickers
        fc = self.cfg.forecast
        params = dcw_fit(nu[self.is_pos], tickers, fc.grid_points, fc.min_fit_days)

        previous = np.asarray(params.seed)
        oos = set(self.oos_pos)
        forecasts = []
        for t in range(self.is_pos[0] + 1, self.oos_pos[-1] + 1):
            self.day = dates[t]
            forecast = dcw_forecast(params, nu[t - 1], previous, dates[t])
            previous = np.asarray(forecast.raw if fc.dcw_feedback == "raw" else forecast.weights)
            if t in oos:
                forecasts.append(np.asarray(forecast.weights))

        rows: dict[float, list[np.ndarray]] = {ec: [] for ec in self.ecs}
        warm: dict[float, ActiveSet | None] = {ec: None for ec in self.ecs}
        for t, w in zip(self.oos_pos, forecasts):
            self.day = dates[t]
            for ec in self.ecs:
                if math.isinf(ec):
                    rows[ec].append(w)
                    continue
                result = project_weights(w, ec, self.cfg.solver, warm[ec])
                warm[ec] = result.active_set
                rows[ec].append(np.asarray(result.weights))

        fitted = dcw_fitted_series(params, nu[self.is_pos])
        in_sample = is_r2(fitted, nu[self.is_pos], tickers)
        r2 = tuple(
            R2Record(strategy=Strategy.DCW, ec=math.inf, window=self.window.label, ticker=tk, kind="is", value=float(v))
            for tk, v in zip(tickers, in_sample)
        )
        summaries = []
        for name, values in (("a", params.a), ("b", params.b), ("a+b", params.persistence)):
            s = summarize_cross_section(values)
            summaries.append(
                DcwWindowSummary(
                    window=self.window.label, parameter=name, mean=s.mean, std=s.std, min=s.min,
                    p05=s.p05, median=s.median, p95=s.p95, max=s.max,
                )
            )
        model = ModelParams(strategy=Strategy.DCW, window=self.window.label, tickers=tickers, dcw=params)
        return self._result(rows, model, r2, tuple(summaries))

    def _result(
        self,
        rows: dict[float, list[np.ndarray]],
        params: ModelParams | None,
        r2: tuple[R2Record, ...] = (),
        summaries: tuple[DcwWindowSummary, ...] = (),
    ) -> CellResult:
        dates = self.window.oos_dates
        realized = self.inputs.series.select(dates)
        nu = self.inputs.weights.weights[self.oos_pos]
        runs = []
        records = list(r2)
        for ec in self.ecs:
            weights = np.vstack(rows[ec])
            open_close = (
                self.inputs.bars.select(dates, self.inputs.tickers) if self.inputs.bars is not None else None
            )
            runs.append(
                StrategyRun(
                    strategy=self.strategy, ec=ec, window=self.window.label, tickers=self.inputs.tickers,
                    dates=dates, weights=weights, realized=realized.stack(), open_close=open_close,
                )
            )
            for ticker, value in zip(self.inputs.tickers, oos_r2(weights, nu, self.inputs.tickers)):
                records.append(
                    R2Record(
                        strategy=self.strategy, ec=ec, window=self.window.label,
                        ticker=ticker, kind="oos", value=float(value),
                    )
                )
        return CellResult(
            window=self.window.label, strategy=self.strategy, runs=tuple(runs), params=params,
            r2=tuple(records), dcw_summaries=summaries, floored_forecasts=self.floored,
        )


def run_cell(inputs: BacktestInputs, window: Window, strategy: Strategy, cfg: BacktestConfig) -> CellResult:
    """Fit, forecast and allocate one strategy over one window.

    Raises:
        PipelineError: Wrapping any toolkit error with the strategy and day it occurred on
    """
    return _CellRunner(inputs, window, strategy, cfg).run()


def _check_windows(windows: list[Window], cfg: BacktestConfig, dates: Sequence[date]) -> None:
    if not windows:
        span = f"{dates[0]}..{dates[-1]}" if dates else "no data"
        raise ConfigError(
            f"no complete {cfg.is_years}+{cfg.oos_years} year window in data spanning {span}",
            "is_years",
        )
    fitted = [s for s in cfg.strategies if s in (Strategy.VT, Strategy.DCC, Strategy.DCW)]
    required = 2
    if fitted:
        required = HAR_MIN_LENGTH
    if Strategy.DCC in fitted or Strategy.DCW in fitted:
        required = max(required, cfg.forecast.min_fit_days)
    short = [f"{w.label} ({len(w.is_dates)} days)" for w in windows if len(w.is_dates) < required]
    if short:
        raise ConfigError(
            f"in-sample periods shorter than {required} days: {', '.join(short)}", "is_years"
        )


class BacktestResult(DCWBaseModel):
    """Report and cell outputs of a backtest run."""

    report: PerformanceReport
    cells: tuple[CellResult, ...]
    output_dir: Path


def _write_artifacts(result_cells: Sequence[CellResult], inputs: BacktestInputs, out: Path) -> None:
    params_dir = out / "params"
    weights_dir = out / "weights"
    params_dir.mkdir(parents=True, exist_ok=True)
    weights_dir.mkdir(parents=True, exist_ok=True)
    for cell in result_cells:
        if cell.params is not None:
            name = f"{cell.window}.{cell.strategy.label}.txt"
            (params_dir / name).write_text(cell.params.to_text(), encoding="utf-8")

    by_key: dict[tuple[Strategy, float], list[StrategyRun]] = {}
    for cell in result_cells:
        for run in cell.runs:
            by_key.setdefault((run.strategy, run.ec), []).append(run)
    for (strategy, ec), runs in by_key.items():
        frames = [
            pd.DataFrame(
                {
                    "date": np.repeat([d.isoformat() for d in run.dates], len(run.tickers)),
                    "ticker": np.tile(run.tickers, len(run.dates)),
                    "weight": run.weights.ravel(),
                }
            )
            for run in sorted(runs, key=lambda r: r.dates[0])
        ]
        path = weights_dir / f"{strategy.label}_{format_bound(ec)}.csv"
        pd.concat(frames, ignore_index=True).to_csv(path, index=False, lineterminator="\n")

    nu = inputs.weights
    pd.DataFrame(
        {
            "date": np.repeat([d.isoformat() for d in nu.dates], len(nu.tickers)),
            "ticker": np.tile(nu.tickers, len(nu.dates)),
            "weight": nu.weights.ravel(),
        }
    ).to_csv(out / "realized_weights.csv", index=False, lineterminator="\n")


def run_backtest(
    cfg: BacktestConfig,
    from_cov: Path | str | None = None,
    out: Path | str | None = None,
    threads: int | None = None,
) -> BacktestResult:
    """Run every (window, strategy) cell, build the report and persist everything.

    Args:
        cfg: Backtest configuration
        from_cov: Covariance series file overriding the configured data source
        out: Output directory overriding cfg.output_dir
        threads: Worker threads overriding cfg.threads

    Raises:
        ConfigError: If no window fits the data or an in-sample period is too short
        DataError: If input files are missing or malformed
        PipelineError: If a cell fails; carries the strategy and day
    """
    threads = threads or cfg.threads
    out_dir = Path(out) if out is not None else cfg.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    inputs, estimated = prepare_inputs(cfg, from_cov, threads)
    if estimated:
        save_cov_series(inputs.series, out_dir / "covariances.csv")
    windows = rolling_windows(inputs.series.dates, cfg.is_years, cfg.oos_years)
    _check_windows(windows, cfg, inputs.series.dates)
    logger.info(
        "Backtest: %d window(s), %d strategy(ies), %d exposure bound(s)",
        len(windows), len(cfg.strategies), len(cfg.ec_grid),
    )

    cells = [(w, s) for w in windows for s in cfg.strategies]
    results = parallel_map(lambda c: run_cell(inputs, c[0], c[1], cfg), cells, threads)
    logger.info("Finished %d cell(s)", len(results))

    runs = [run for cell in results for run in cell.runs]
    report = build_report(
        runs,
        cfg.eval,
        r2_records=[r for cell in results for r in cell.r2],
        sectors=inputs.sectors or None,
        dcw_summaries=[s for cell in results for s in cell.dcw_summaries],
        repaired_days=inputs.repaired_days,
        floored_forecasts=sum(cell.floored_forecasts for cell in results),
    )
    _write_artifacts(results, inputs, out_dir)
    emit_reports(report, out_dir, cfg)
    return BacktestResult(report=report, cells=tuple(results), output_dir=out_dir)
