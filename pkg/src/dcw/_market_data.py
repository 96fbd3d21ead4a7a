"""Tick ingestion, cleaning, refresh-time synchronization and return binning.

The functions here turn raw trade prints into the per-day inputs of the realized
measures: a refresh-time synchronized price matrix, its log-return panel, and a
panel of fixed-width bin returns. Daily open/close bars and sector metadata are
loaded here as well.
"""

from __future__ import annotations

import logging
import math
import re
import warnings
from collections.abc import Mapping, Sequence
from datetime import date
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from pydantic import Field, model_validator

from dcw._base import DCWBaseModel, FloatArray, Int64Array, StrArray
from dcw._config import CleanConfig, TradingSession
from dcw._exceptions import (
    DomainError,
    EmptyInputError,
    InsufficientDataError,
    MisalignedDatesError,
    ParseError,
)
from dcw._utils import parallel_map

logger = logging.getLogger(__name__)

TICK_COLUMNS = ["timestamp", "ticker", "price"]
BAR_COLUMNS = ["date", "ticker", "open", "close"]
META_COLUMNS = ["ticker", "sector"]

_OFFSET_PATTERN = r"(?:Z|[+-]\d{2}(?::?\d{2})?)$"
_NS_PER_MINUTE = 60 * 1_000_000_000


class TickSeries(DCWBaseModel):
    """Trades of one or more tickers stored column-wise.

    Records are sorted by (ticker, timestamp). Timestamps are UTC nanoseconds since
    the epoch. Prices are not validated here so that unclean input can be
    represented; clean_ticks removes non-positive prices.
    """

    timestamps: Int64Array
    tickers: StrArray
    prices: FloatArray

    @model_validator(mode="after")
    def _check_columns(self) -> TickSeries:
        n = len(self.timestamps)
        if self.timestamps.ndim != 1 or len(self.tickers) != n or self.prices.shape != (n,):
            raise ValueError("timestamps, tickers and prices must be 1-D and of equal length")
        if n > 1:
            same = self.tickers[1:] == self.tickers[:-1]
            if np.any(self.tickers[1:] < self.tickers[:-1]) or np.any(
                same & (self.timestamps[1:] < self.timestamps[:-1])
            ):
                raise ValueError("records must be sorted by (ticker, timestamp)")
        return self

    @classmethod
    def from_arrays(
        cls, timestamps: Sequence[int] | np.ndarray, tickers: Sequence[str] | np.ndarray,
        prices: Sequence[float] | np.ndarray,
    ) -> TickSeries:
        """Build a series from unsorted columns, sorting by (ticker, timestamp)."""
        ts = np.asarray(timestamps, dtype=np.int64)
        tk = np.asarray([str(t) for t in tickers], dtype=object)
        px = np.asarray(prices, dtype=np.float64)
        order = np.lexsort((ts, tk.astype(str))) if len(ts) else np.arange(0)
        return cls(timestamps=ts[order], tickers=tk[order], prices=px[order])

    @classmethod
    def empty(cls) -> TickSeries:
        """A series with no trades."""
        return cls.from_arrays([], [], [])

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def ticker_list(self) -> list[str]:
        """Distinct tickers in sorted order."""
        return sorted({str(t) for t in self.tickers})

    def _take(self, mask: np.ndarray) -> TickSeries:
        return TickSeries(
            timestamps=self.timestamps[mask], tickers=self.tickers[mask], prices=self.prices[mask]
        )

    def split_by_ticker(self) -> dict[str, TickSeries]:
        """Group trades by ticker."""
        return {t: self._take(self.tickers == t) for t in self.ticker_list}

    def local_dates(self, timezone: str) -> np.ndarray:
        """Local calendar date of every trade."""
        stamps = pd.DatetimeIndex(pd.to_datetime(self.timestamps, utc=True)).tz_convert(timezone)
        return np.asarray(stamps.date, dtype=object)

    def split_by_day(self, timezone: str) -> dict[date, TickSeries]:
        """Group trades by local calendar date, in date order."""
        days = self.local_dates(timezone)
        return {d: self._take(days == d) for d in sorted(set(days))}


class SyncedPrices(DCWBaseModel):
    """Refresh-time synchronized prices of one day: (J+1) rows by M assets."""

    day: date
    tickers: tuple[str, ...]
    times: Int64Array
    prices: FloatArray

    @model_validator(mode="after")
    def _check_shape(self) -> SyncedPrices:
        if self.prices.ndim != 2 or self.prices.shape != (len(self.times), len(self.tickers)):
            raise ValueError("prices must have one row per sync time and one column per ticker")
        if len(self.times) < 2:
            raise ValueError("at least two sync points are required")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("sync times must be strictly increasing")
        return self


class ReturnPanel(DCWBaseModel):
    """Synchronized intraday log-returns of one day: J rows by M assets."""

    day: date
    tickers: tuple[str, ...]
    returns: FloatArray

    @model_validator(mode="after")
    def _check_panel(self) -> ReturnPanel:
        if self.returns.ndim != 2 or self.returns.shape[1] != len(self.tickers):
            raise ValueError("returns must be a J x M matrix matching the ticker list")
        if self.returns.shape[0] < 1:
            raise ValueError("a return panel needs J >= 1")
        if not np.all(np.isfinite(self.returns)):
            raise ValueError("returns must be finite")
        return self

    @property
    def n_returns(self) -> int:
        """J, the number of synchronized returns."""
        return int(self.returns.shape[0])

    @property
    def n_assets(self) -> int:
        """M, the number of assets."""
        return int(self.returns.shape[1])

    def scaled(self, factor: float) -> ReturnPanel:
        """The same panel with returns multiplied by factor (100 for percent)."""
        return ReturnPanel(day=self.day, tickers=self.tickers, returns=self.returns * factor)


class BinnedReturnPanel(DCWBaseModel):
    """Fixed-width bin returns of one day: J~ rows by M assets."""

    day: date
    tickers: tuple[str, ...]
    returns: FloatArray
    width_minutes: int = Field(gt=0)

    @model_validator(mode="after")
    def _check_panel(self) -> BinnedReturnPanel:
        if self.returns.ndim != 2 or self.returns.shape[1] != len(self.tickers):
            raise ValueError("returns must be a J~ x M matrix matching the ticker list")
        if not np.all(np.isfinite(self.returns)):
            raise ValueError("binned returns must be finite")
        return self

    @property
    def n_bins(self) -> int:
        """J~, the number of bins."""
        return int(self.returns.shape[0])

    def scaled(self, factor: float) -> BinnedReturnPanel:
        """The same panel with returns multiplied by factor."""
        return BinnedReturnPanel(
            day=self.day, tickers=self.tickers, returns=self.returns * factor,
            width_minutes=self.width_minutes,
        )


class DailyBarPanel(DCWBaseModel):
    """Open-to-close daily returns, one row per trading day and one column per asset.

    Returns are fractions (0.01 = 1%).
    """

    dates: tuple[date, ...]
    tickers: tuple[str, ...]
    returns: FloatArray

    @model_validator(mode="after")
    def _check_panel(self) -> DailyBarPanel:
        if self.returns.shape != (len(self.dates), len(self.tickers)):
            raise ValueError("returns must have one row per date and one column per ticker")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise ValueError("dates must be strictly increasing")
        if not np.all(np.isfinite(self.returns)):
            raise ValueError("open-close returns must be finite")
        return self

    def on(self, day: date) -> np.ndarray:
        """Open-close returns of one day.

        Raises:
            MisalignedDatesError: If the day has no bar
        """
        try:
            row = self.dates.index(day)
        except ValueError:
            raise MisalignedDatesError("daily bars", [day]) from None
        return self.returns[row]

    def select(self, dates: Sequence[date], tickers: Sequence[str] | None = None) -> np.ndarray:
        """Rows for the given dates (and optional ticker order) as a T x M array.

        Raises:
            MisalignedDatesError: If any date has no bar or a ticker has no column
        """
        index = {d: i for i, d in enumerate(self.dates)}
        missing = [d for d in dates if d not in index]
        if missing:
            raise MisalignedDatesError("daily bars", missing)
        rows = self.returns[[index[d] for d in dates]]
        if tickers is None or tuple(tickers) == self.tickers:
            return rows
        cols = {t: j for j, t in enumerate(self.tickers)}
        absent = [t for t in tickers if t not in cols]
        if absent:
            raise MisalignedDatesError(f"daily bars (no column for {', '.join(absent)})")
        return rows[:, [cols[t] for t in tickers]]


class AssetMeta(DCWBaseModel):
    """Sector classification of one ticker."""

    ticker: str = Field(min_length=1)
    sector: str


class CleanReport(DCWBaseModel):
    """Per-ticker counts of ticks removed by clean_ticks."""

    removed_nonpositive: dict[str, int] = Field(default_factory=dict)
    removed_duplicates: dict[str, int] = Field(default_factory=dict)
    removed_outliers: dict[str, int] = Field(default_factory=dict)
    emptied: tuple[str, ...] = ()

    @property
    def total_removed(self) -> int:
        """Total number of ticks removed across all rules."""
        return (
            sum(self.removed_nonpositive.values())
            + sum(self.removed_duplicates.values())
            + sum(self.removed_outliers.values())
        )


def _read_csv(path: Path, expected: list[str]) -> pd.DataFrame:
    """Read a CSV with string columns and check its header."""
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except FileNotFoundError:
        raise ParseError(str(path), None, "file does not exist") from None
    except pd.errors.EmptyDataError:
        raise EmptyInputError(str(path)) from None
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        raise ParseError(str(path), int(match.group(1)) if match else None, str(e)) from e
    columns = [c.strip() for c in frame.columns]
    if columns != expected:
        raise ParseError(str(path), 1, f"expected header {','.join(expected)!r}")
    frame.columns = columns
    return frame


def _first_bad(path: Path, bad: pd.Series, reason: str) -> None:
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        raise ParseError(str(path), row + 2, reason)


def _to_ns(stamps: pd.Series) -> np.ndarray:
    return np.asarray(pd.DatetimeIndex(stamps).as_unit("ns").asi8, dtype=np.int64)


def _seconds_of_day(local: pd.DatetimeIndex) -> np.ndarray:
    return np.asarray((local - local.normalize()).total_seconds(), dtype=np.float64)


def _time_seconds(value: Any) -> float:
    return float(value.hour * 3600 + value.minute * 60 + value.second + value.microsecond / 1e6)


def load_ticks(path: Path | str, session: TradingSession | None = None) -> TickSeries:
    """Load a tick CSV and keep the trades inside the trading session.

    The file has the header ``timestamp,ticker,price``; timestamps are ISO-8601 with
    a UTC offset. Trades whose local time of day lies outside
    [session.start, session.end] are dropped.

    Args:
        path: CSV file to read
        session: Trading hours (default 09:30-16:00 America/New_York)

    Returns:
        TickSeries sorted by (ticker, timestamp)

    Raises:
        ParseError: If a row is malformed (message carries the line number)
        EmptyInputError: If no trade survives the session filter
    """
    session = session or TradingSession()
    path = Path(path)
    frame = _read_csv(path, TICK_COLUMNS)
    if frame.empty:
        raise EmptyInputError(str(path))

    raw_ts = frame["timestamp"].str.strip()
    _first_bad(path, ~raw_ts.str.contains(_OFFSET_PATTERN, regex=True), "timestamp lacks a UTC offset")
    stamps = pd.to_datetime(raw_ts, utc=True, format="ISO8601", errors="coerce")
    _first_bad(path, stamps.isna(), "unparseable timestamp")

    tickers = frame["ticker"].str.strip()
    _first_bad(path, tickers == "", "empty ticker")

    prices = pd.to_numeric(frame["price"].str.strip(), errors="coerce")
    _first_bad(path, prices.isna(), "unparseable price")
    _first_bad(path, ~np.isfinite(prices) | (prices <= 0), "price must be positive")

    local = pd.DatetimeIndex(stamps).tz_convert(session.timezone)
    seconds = _seconds_of_day(local)
    inside = (seconds >= _time_seconds(session.start)) & (seconds <= _time_seconds(session.end))
    dropped = int((~inside).sum())
    if dropped:
        logger.debug("Dropped %d trades outside the session from %s", dropped, path)
    if not inside.any():
        raise EmptyInputError(f"{path} (no trades inside the session)")

    ticks = TickSeries.from_arrays(
        _to_ns(stamps[inside]), tickers[inside].to_numpy(), prices[inside].to_numpy()
    )
    logger.info("Loaded %d trades for %d tickers from %s", len(ticks), len(ticks.ticker_list), path)
    return ticks


def _collapse_duplicates(ts: np.ndarray, px: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if len(ts) < 2 or np.all(np.diff(ts) > 0):
        return ts, px
    grouped = pd.Series(px).groupby(ts, sort=True).median()
    return grouped.index.to_numpy(dtype=np.int64), grouped.to_numpy(dtype=np.float64)


def _side_statistics(windows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Median and MAD of each row of a NaN-padded window matrix (NaN for empty rows)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        median = np.nanmedian(windows, axis=1)
        mad = np.nanmedian(np.abs(windows - median[:, None]), axis=1)
    return median, mad


def _mad_outliers(prices: np.ndarray, cfg: CleanConfig) -> np.ndarray:
    """Flag prices far from both the preceding and the following trades.

    Each side holds up to mad_window // 2 neighbours. A price is flagged when it
    lies more than mad_k * max(MAD, mad_floor * median) from the median of every
    side that has neighbours, so a level shift (consistent with the trades on one
    side) is kept while an isolated print is removed.
    """
    n = len(prices)
    half = max(1, cfg.mad_window // 2)
    padded = np.concatenate([np.full(half, np.nan), prices, np.full(half, np.nan)])
    view = np.lib.stride_tricks.sliding_window_view(padded, half)

    flagged = np.ones(n, dtype=bool)
    any_side = np.zeros(n, dtype=bool)
    for windows in (view[:n], view[half + 1 : half + 1 + n]):
        median, mad = _side_statistics(windows)
        present = np.isfinite(median)
        scale = np.maximum(np.where(present, mad, 0.0), cfg.mad_floor * np.where(present, median, 0.0))
        far = np.abs(prices - np.where(present, median, prices)) > cfg.mad_k * scale
        flagged &= far | ~present
        any_side |= present
    return flagged & any_side


def _clean_stream(
    item: tuple[str, date, TickSeries], cfg: CleanConfig
) -> tuple[str, np.ndarray, np.ndarray, tuple[int, int, int]]:
    ticker, _, stream = item
    ts, px = np.asarray(stream.timestamps), np.asarray(stream.prices)

    positive = np.isfinite(px) & (px > 0)
    n_nonpositive = int((~positive).sum())
    ts, px = ts[positive], px[positive]

    before = len(ts)
    ts, px = _collapse_duplicates(ts, px)
    n_duplicates = before - len(ts)

    n_outliers = 0
    while len(px):
        outliers = _mad_outliers(px, cfg)
        if not outliers.any():
            break
        n_outliers += int(outliers.sum())
        ts, px = ts[~outliers], px[~outliers]
    return ticker, ts, px, (n_nonpositive, n_duplicates, n_outliers)


def clean_ticks_with_report(
    ticks: TickSeries, cfg: CleanConfig | None = None, threads: int = 1
) -> tuple[TickSeries, CleanReport]:
    """Clean every (ticker, day) stream and report what was removed.

    Rules, applied to each ticker's trades of one local trading day in order:
    1. zero, negative and non-finite prices are removed
    2. trades sharing a timestamp collapse to one trade at their median price
    3. prices deviating by more than mad_k times max(MAD, mad_floor * median)
       from the medians of both the preceding and the following mad_window // 2
       trades are removed, repeating until no trade is flagged

    The fixed-point iteration in rule 3 makes cleaning idempotent. Days are
    cleaned independently, so an overnight gap never looks like an outlier.

    Args:
        ticks: Sorted trades of any number of tickers
        cfg: Cleaning settings (defaults: mad_k=10, mad_window=50)
        threads: Worker threads for the (ticker, day) map

    Returns:
        Tuple of (cleaned TickSeries, CleanReport)
    """
    cfg = cfg or CleanConfig()
    streams = [
        (ticker, day, day_stream)
        for ticker, stream in ticks.split_by_ticker().items()
        for day, day_stream in stream.split_by_day(cfg.timezone).items()
    ]
    cleaned = parallel_map(lambda item: _clean_stream(item, cfg), streams, threads)

    ts_parts, tk_parts, px_parts = [], [], []
    nonpositive: dict[str, int] = {}
    duplicates: dict[str, int] = {}
    outliers: dict[str, int] = {}
    kept: dict[str, int] = {}
    for ticker, ts, px, (n_np, n_dup, n_out) in cleaned:
        nonpositive[ticker] = nonpositive.get(ticker, 0) + n_np
        duplicates[ticker] = duplicates.get(ticker, 0) + n_dup
        outliers[ticker] = outliers.get(ticker, 0) + n_out
        kept[ticker] = kept.get(ticker, 0) + len(ts)
        if len(ts) == 0:
            continue
        ts_parts.append(ts)
        px_parts.append(px)
        tk_parts.append(np.full(len(ts), ticker, dtype=object))
    emptied = [ticker for ticker, count in kept.items() if count == 0]

    report = CleanReport(
        removed_nonpositive=nonpositive,
        removed_duplicates=duplicates,
        removed_outliers=outliers,
        emptied=tuple(emptied),
    )
    if emptied:
        logger.warning("Cleaning emptied %d stream(s): %s", len(emptied), ", ".join(emptied))
    logger.debug("Cleaning removed %d of %d trades", report.total_removed, len(ticks))

    if not ts_parts:
        return TickSeries.empty(), report
    result = TickSeries(
        timestamps=np.concatenate(ts_parts),
        tickers=np.concatenate(tk_parts),
        prices=np.concatenate(px_parts),
    )
    return result, report


def clean_ticks(ticks: TickSeries, cfg: CleanConfig | None = None, threads: int = 1) -> TickSeries:
    """Clean every ticker's stream (see clean_ticks_with_report for the rules)."""
    return clean_ticks_with_report(ticks, cfg, threads)[0]


def _ordered_streams(
    streams: Mapping[str, TickSeries], tickers: Sequence[str] | None
) -> list[tuple[str, TickSeries]]:
    order = list(tickers) if tickers is not None else list(streams)
    missing = [t for t in order if t not in streams]
    if missing:
        raise InsufficientDataError(missing[0], 0, 2)
    return [(t, streams[t]) for t in order]


def refresh_time_sync(
    streams: Mapping[str, TickSeries], day: date, tickers: Sequence[str] | None = None
) -> SyncedPrices:
    """Synchronize one day's trades on refresh times.

    The first sync point is the instant by which every asset has traded. Each
    further point is the first instant at which every asset has traded again
    strictly after the previous point. Every asset contributes its last trade
    price at or before each point.

    Args:
        streams: Per-ticker trades of the day
        day: Trading day the streams belong to
        tickers: Asset order (default: mapping order)

    Returns:
        SyncedPrices with J+1 strictly increasing sync times

    Raises:
        InsufficientDataError: If an asset has fewer than 2 trades or the streams
            yield fewer than 2 sync points
    """
    ordered = _ordered_streams(streams, tickers)
    if not ordered:
        raise InsufficientDataError("refresh-time sync", 0, 1)
    times = []
    prices = []
    for ticker, stream in ordered:
        if len(stream) < 2:
            raise InsufficientDataError(ticker, len(stream), 2)
        times.append(np.asarray(stream.timestamps))
        prices.append(np.asarray(stream.prices))

    point = max(int(t[0]) for t in times)
    points = [point]
    exhausted = ""
    while True:
        nxt = [np.searchsorted(t, point, side="right") for t in times]
        done = [i for i, k in enumerate(nxt) if k >= len(times[i])]
        if done:
            exhausted = ordered[done[0]][0]
            break
        point = max(int(times[i][k]) for i, k in enumerate(nxt))
        points.append(point)

    if len(points) < 2:
        raise InsufficientDataError(exhausted, 1, 2)

    grid = np.asarray(points, dtype=np.int64)
    matrix = np.column_stack(
        [p[np.searchsorted(t, grid, side="right") - 1] for t, p in zip(times, prices)]
    )
    return SyncedPrices(day=day, tickers=tuple(t for t, _ in ordered), times=grid, prices=matrix)


def intraday_returns(prices: SyncedPrices) -> ReturnPanel:
    """Log-returns between consecutive sync points.

    Raises:
        DomainError: If any synchronized price is not positive
    """
    p = np.asarray(prices.prices)
    if np.any(p <= 0) or not np.all(np.isfinite(p)):
        raise DomainError(f"non-positive or non-finite synchronized price on {prices.day}")
    return ReturnPanel(day=prices.day, tickers=prices.tickers, returns=np.diff(np.log(p), axis=0))


def bin_returns(
    streams: Mapping[str, TickSeries],
    day: date,
    session: TradingSession | None = None,
    width_minutes: int = 15,
    tickers: Sequence[str] | None = None,
) -> BinnedReturnPanel:
    """Returns over equally spaced bins of the trading session.

    Bins are [start + k*w, start + (k+1)*w); the last bin is closed at the session
    end and may be shorter. A bin's return runs from the last price before the
    bin start (the day's first price if there is none) to the last price in the
    bin. Bins without trades get a zero return.

    Args:
        streams: Per-ticker trades of the day
        day: Trading day
        session: Trading hours (default 09:30-16:00 America/New_York)
        width_minutes: Bin width (default 15)
        tickers: Asset order (default: mapping order)

    Returns:
        BinnedReturnPanel with ceil(session length / width) bins
    """
    session = session or TradingSession()
    open_ts, close_ts = session.bounds(day)
    start, end = open_ts.value, close_ts.value
    width = width_minutes * _NS_PER_MINUTE
    n_bins = max(1, math.ceil((end - start) / width))
    edges = start + width * np.arange(n_bins + 1, dtype=np.int64)
    edges[-1] = end + 1

    order = list(tickers) if tickers is not None else list(streams)
    columns = []
    for ticker in order:
        stream = streams.get(ticker)
        column = np.zeros(n_bins)
        if stream is not None and len(stream):
            ts = np.asarray(stream.timestamps)
            px = np.asarray(stream.prices)
            keep = (ts >= start) & (ts <= end)
            ts, px = ts[keep], px[keep]
        else:
            ts = px = np.empty(0)
        if len(ts):
            log_px = np.log(px)
            last_before = np.searchsorted(ts, edges, side="left") - 1
            for k in range(n_bins):
                lo, hi = last_before[k], last_before[k + 1]
                if hi == lo:
                    continue
                reference = log_px[lo] if lo >= 0 else log_px[0]
                column[k] = log_px[hi] - reference
        columns.append(column)
    returns = np.column_stack(columns) if columns else np.zeros((n_bins, 0))
    return BinnedReturnPanel(day=day, tickers=tuple(order), returns=returns, width_minutes=width_minutes)


def load_daily_bars(path: Path | str, tickers: Sequence[str] | None = None) -> DailyBarPanel:
    """Load ``date,ticker,open,close`` bars as open-to-close returns.

    Args:
        path: CSV file to read
        tickers: Columns to keep, in order (default: all tickers, sorted)

    Returns:
        DailyBarPanel with r_oc = close / open - 1

    Raises:
        ParseError: If a row is malformed or a price is not positive
        MisalignedDatesError: If a requested ticker lacks a bar on some date
    """
    path = Path(path)
    frame = _read_csv(path, BAR_COLUMNS)
    if frame.empty:
        raise EmptyInputError(str(path))
    days = pd.to_datetime(frame["date"].str.strip(), format="%Y-%m-%d", errors="coerce")
    _first_bad(path, days.isna(), "unparseable date")
    opens = pd.to_numeric(frame["open"].str.strip(), errors="coerce")
    closes = pd.to_numeric(frame["close"].str.strip(), errors="coerce")
    _first_bad(path, opens.isna() | closes.isna(), "unparseable open or close")
    _first_bad(path, (opens <= 0) | (closes <= 0), "open and close must be positive")

    table = pd.DataFrame(
        {"date": days.dt.date, "ticker": frame["ticker"].str.strip(), "r_oc": closes / opens - 1.0}
    )
    duplicated = table.duplicated(["date", "ticker"])
    _first_bad(path, duplicated, "duplicate (date, ticker) bar")
    wide = table.pivot(index="date", columns="ticker", values="r_oc").sort_index()
    columns = list(tickers) if tickers is not None else sorted(wide.columns)
    absent = [t for t in columns if t not in wide.columns]
    if absent:
        raise MisalignedDatesError(f"{path} (no bars for {', '.join(absent)})")
    wide = wide[columns]
    holes = wide.isna().any(axis=1)
    if holes.any():
        raise MisalignedDatesError(str(path), list(wide.index[holes.to_numpy()]))
    return DailyBarPanel(dates=tuple(wide.index), tickers=tuple(columns), returns=wide.to_numpy())


def load_asset_meta(path: Path | str) -> tuple[AssetMeta, ...]:
    """Load ``ticker,sector`` metadata.

    Raises:
        ParseError: If a ticker is empty or repeated
    """
    path = Path(path)
    frame = _read_csv(path, META_COLUMNS)
    tickers = frame["ticker"].str.strip()
    _first_bad(path, tickers == "", "empty ticker")
    _first_bad(path, tickers.duplicated(), "duplicate ticker")
    return tuple(
        AssetMeta(ticker=t, sector=s) for t, s in zip(tickers, frame["sector"].str.strip())
    )
