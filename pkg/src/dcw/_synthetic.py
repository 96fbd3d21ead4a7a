"""Synthetic tick data with a known latent covariance process.

Daily covariances are D R_t D with constant volatilities D and a correlation
matrix R_t following the scalar targeted recursion used by the DCC forecaster,
driven by the sample correlation of each day's own intraday returns. Every
strategy therefore has a pseudo-true benchmark: the saved true covariances and
their minimum-variance weights.
"""

from __future__ import annotations

import json
import logging
from datetime import date
from pathlib import Path

import numpy as np
import pandas as pd

from dcw._base import DCWBaseModel
from dcw._config import SyntheticMarketSpec
from dcw._labeled_enum import Strategy
from dcw._market_data import DailyBarPanel, TickSeries
from dcw._realized import (
    CovarianceMatrix,
    CovMatrixSeries,
    RealizedWeightSeries,
    realized_weight_series,
    save_cov_series,
)

logger = logging.getLogger(__name__)

SECTOR_NAMES = ("Energy", "Financials", "Health Care", "Industrials", "Technology")


class SyntheticMarket(DCWBaseModel):
    """In-memory synthetic dataset."""

    spec: SyntheticMarketSpec
    ticks: TickSeries
    bars: DailyBarPanel
    true_cov: CovMatrixSeries
    true_weights: RealizedWeightSeries
    sectors: dict[str, str]


class SyntheticDataset(DCWBaseModel):
    """Paths of a synthetic dataset written to disk."""

    ticks_path: Path
    bars_path: Path
    meta_path: Path
    true_cov_path: Path
    true_weights_path: Path
    config_path: Path


def equicorrelation(n_assets: int, rho: float) -> np.ndarray:
    """Matrix with unit diagonal and rho everywhere else."""
    target = np.full((n_assets, n_assets), rho)
    np.fill_diagonal(target, 1.0)
    return target


def _sample_correlation(increments: np.ndarray) -> np.ndarray:
    cross = increments.T @ increments
    sd = np.sqrt(np.diag(cross))
    corr = cross / np.outer(sd, sd)
    np.fill_diagonal(corr, 1.0)
    return corr


def simulate_dcc_correlations(
    n_days: int,
    target: np.ndarray,
    a: float,
    b: float,
    n_increments: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Simulate latent correlations and the intraday draws they generate.

    R_t = (1 - a^2 - b^2) target + a^2 C_{t-1} + b^2 R_{t-1} with R_0 = target, where
    C_t is the sample correlation of day t's standardized increments, drawn as
    N(0, R_t / n_increments).

    Returns:
        Tuple of latent correlations (T, M, M), sample correlations (T, M, M) and
        standardized increments (T, n_increments, M)
    """
    m = target.shape[0]
    latent = np.empty((n_days, m, m))
    sample = np.empty((n_days, m, m))
    draws = np.empty((n_days, n_increments, m))
    a2, b2 = a * a, b * b
    corr = target.copy()
    for t in range(n_days):
        latent[t] = corr
        chol = np.linalg.cholesky(corr)
        z = rng.standard_normal((n_increments, m)) @ chol.T / np.sqrt(n_increments)
        draws[t] = z
        sample[t] = _sample_correlation(z) if m > 1 else np.ones((1, 1))
        corr = (1.0 - a2 - b2) * target + a2 * sample[t] + b2 * corr
        corr = 0.5 * (corr + corr.T)
        np.fill_diagonal(corr, 1.0)
    return latent, sample, draws


def _default_vols(n_assets: int) -> np.ndarray:
    return np.linspace(0.8, 2.5, n_assets) if n_assets > 1 else np.array([1.5])


def simulate_market(spec: SyntheticMarketSpec) -> SyntheticMarket:
    """Simulate trades, daily bars and the true covariances described by spec."""
    rng = np.random.default_rng(spec.seed)
    m, k = spec.n_assets, spec.intraday_points
    tickers = spec.tickers
    vols = np.asarray(spec.vols, dtype=np.float64) if spec.vols is not None else _default_vols(m)
    target = equicorrelation(m, spec.mean_correlation)
    latent, _, draws = simulate_dcc_correlations(
        spec.n_days, target, spec.dcc_a, spec.dcc_b, k - 1, rng
    )

    days = [d.date() for d in pd.bdate_range(spec.start_date, periods=spec.n_days)]
    session = spec.session
    offsets = np.round(np.linspace(0.0, session.length_seconds, k) * 1e9).astype(np.int64)

    stamps, names, prices = [], [], []
    opens = np.empty((spec.n_days, m))
    closes = np.empty((spec.n_days, m))
    log_level = np.zeros(m)
    for t, day in enumerate(days):
        start, _ = session.bounds(day)
        instants = start.value + offsets
        path = log_level + np.vstack([np.zeros(m), np.cumsum(draws[t] * vols / 100.0, axis=0)])
        log_level = path[-1]
        observed = path + spec.noise_scale * rng.standard_normal(path.shape)
        px = 100.0 * np.exp(observed)
        traded = rng.random((k, m)) < spec.trade_probability
        traded[0] = traded[-1] = True
        for j, ticker in enumerate(tickers):
            mask = traded[:, j]
            stamps.append(instants[mask])
            names.append(np.full(int(mask.sum()), ticker, dtype=object))
            prices.append(px[mask, j])
        opens[t], closes[t] = px[0], px[-1]

    ticks = TickSeries.from_arrays(np.concatenate(stamps), np.concatenate(names), np.concatenate(prices))
    bars = DailyBarPanel(dates=tuple(days), tickers=tickers, returns=closes / opens - 1.0)
    scale = np.outer(vols, vols)
    true_cov = CovMatrixSeries(
        tickers=tickers,
        matrices=tuple(
            CovarianceMatrix.from_values(day, latent[t] * scale) for t, day in enumerate(days)
        ),
    )
    sectors = {t: SECTOR_NAMES[i % len(SECTOR_NAMES)] for i, t in enumerate(tickers)}
    logger.info("Simulated %d days x %d assets (%d trades)", spec.n_days, m, len(ticks))
    return SyntheticMarket(
        spec=spec, ticks=ticks, bars=bars, true_cov=true_cov,
        true_weights=realized_weight_series(true_cov), sectors=sectors,
    )


def _write_ticks(ticks: TickSeries, path: Path) -> None:
    stamps = pd.DatetimeIndex(pd.to_datetime(ticks.timestamps, utc=True))
    frame = pd.DataFrame(
        {
            "timestamp": stamps.strftime("%Y-%m-%dT%H:%M:%S.%f+00:00"),
            "ticker": ticks.tickers.astype(str),
            "price": ticks.prices,
        }
    )
    frame.to_csv(path, index=False, float_format="%.10g", lineterminator="\n")


def _write_bars(market: SyntheticMarket, path: Path) -> None:
    rows = []
    by_ticker = market.ticks.split_by_ticker()
    for ticker in market.bars.tickers:
        stream = by_ticker[ticker]
        days = stream.local_dates(market.spec.session.timezone)
        frame = pd.DataFrame({"date": days, "price": stream.prices})
        grouped = frame.groupby("date", sort=True)["price"]
        rows.append(
            pd.DataFrame(
                {
                    "date": [d.isoformat() for d in grouped.first().index],
                    "ticker": ticker,
                    "open": grouped.first().to_numpy(),
                    "close": grouped.last().to_numpy(),
                }
            )
        )
    table = pd.concat(rows, ignore_index=True).sort_values(["date", "ticker"], kind="stable")
    table.to_csv(path, index=False, float_format="%.10g", lineterminator="\n")


def generate_synthetic(spec: SyntheticMarketSpec, out_dir: Path | str) -> SyntheticDataset:
    """Simulate a market and write its files.

    Writes ``ticks.csv``, ``bars.csv``, ``meta.csv``, ``true_cov.csv``,
    ``true_weights.csv`` and a ready-to-run ``backtest.json`` into out_dir. The
    same spec always produces identical files.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    market = simulate_market(spec)
    dataset = SyntheticDataset(
        ticks_path=out / "ticks.csv",
        bars_path=out / "bars.csv",
        meta_path=out / "meta.csv",
        true_cov_path=out / "true_cov.csv",
        true_weights_path=out / "true_weights.csv",
        config_path=out / "backtest.json",
    )
    _write_ticks(market.ticks, dataset.ticks_path)
    _write_bars(market, dataset.bars_path)
    pd.DataFrame(
        {"ticker": list(market.sectors), "sector": list(market.sectors.values())}
    ).to_csv(dataset.meta_path, index=False, lineterminator="\n")
    save_cov_series(market.true_cov, dataset.true_cov_path)
    weights = market.true_weights
    pd.DataFrame(
        {
            "date": np.repeat([d.isoformat() for d in weights.dates], len(weights.tickers)),
            "ticker": np.tile(weights.tickers, len(weights.dates)),
            "weight": weights.weights.ravel(),
        }
    ).to_csv(dataset.true_weights_path, index=False, float_format="%.17g", lineterminator="\n")

    years = sorted({d.year for d in weights.dates})
    config = {
        "ticks_path": dataset.ticks_path.name,
        "bars_path": dataset.bars_path.name,
        "meta_path": dataset.meta_path.name,
        "assets": list(spec.tickers),
        "is_years": max(1, min(5, len(years) - 1)),
        "oos_years": 1,
        "strategies": [s.label for s in Strategy],
        "clean": {
            "session_start": spec.session.start.isoformat(),
            "session_end": spec.session.end.isoformat(),
            "timezone": spec.session.timezone,
        },
        "output_dir": "results",
        "seed": spec.seed,
    }
    dataset.config_path.write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    logger.info("Wrote synthetic dataset to %s", out)
    return dataset


def load_true_weights(path: Path | str) -> RealizedWeightSeries:
    """Read ``true_weights.csv`` back into a weight series."""
    table = pd.read_csv(path, dtype={"date": str, "ticker": str}, float_precision="round_trip")
    wide = table.pivot(index="date", columns="ticker", values="weight").sort_index()
    tickers = tuple(dict.fromkeys(table["ticker"]))
    return RealizedWeightSeries(
        tickers=tickers,
        dates=tuple(date.fromisoformat(d) for d in wide.index),
        weights=wide[list(tickers)].to_numpy(),
    )
