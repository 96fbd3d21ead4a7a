"""Realized-kernel covariance matrices, realized correlations and realized weights."""

from __future__ import annotations

import logging
import math
from collections.abc import Mapping, Sequence
from datetime import date
from pathlib import Path
from typing import ClassVar, Literal

import numpy as np
import pandas as pd
from pydantic import Field, model_validator

from dcw._base import DCWBaseModel, FloatArray
from dcw._config import RealizedConfig, TradingSession
from dcw._exceptions import (
    DataError,
    DegenerateVarianceError,
    DomainError,
    EmptyInputError,
    InsufficientDataError,
    LagOutOfRangeError,
    MisalignedDatesError,
    ParseError,
)
from dcw._market_data import (
    BinnedReturnPanel,
    ReturnPanel,
    TickSeries,
    bin_returns,
    intraday_returns,
    refresh_time_sync,
)
from dcw._utils import (
    MAX_CONDITION,
    PSD_TOLERANCE,
    eigen_extremes,
    parallel_map,
    solve_symmetric,
    symmetrize,
)

logger = logging.getLogger(__name__)

SYMMETRY_TOLERANCE = 1e-12
ASSETS_PREFIX = "# assets:"


class CovarianceMatrix(DCWBaseModel):
    """A dated symmetric M x M matrix with positive-semidefiniteness metadata.

    Attributes:
        day: Date the matrix refers to
        values: The matrix (squared daily percent returns for covariances)
        kind: "covariance" or "correlation"
        psd: Smallest eigenvalue >= -1e-10 times the largest
        needs_repair: Matrix is singular, indefinite or too ill-conditioned to invert
        ridge: Relative ridge added by ensure_invertible (None if never repaired)
    """

    day: date
    values: FloatArray
    kind: Literal["covariance", "correlation"] = "covariance"
    psd: bool
    needs_repair: bool = False
    ridge: float | None = None

    @model_validator(mode="after")
    def _check_matrix(self) -> CovarianceMatrix:
        v = self.values
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] == 0:
            raise ValueError(f"matrix must be square and non-empty, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("matrix entries must be finite")
        scale = max(1.0, float(np.max(np.abs(v))))
        if np.max(np.abs(v - v.T)) > SYMMETRY_TOLERANCE * scale:
            raise ValueError("matrix must be symmetric")
        if self.psd:
            low, high = eigen_extremes(v)
            if low < -PSD_TOLERANCE * max(abs(high), abs(low)):
                raise ValueError(f"psd flag set but smallest eigenvalue is {low:.3g}")
        return self

    @classmethod
    def from_values(
        cls, day: date, values: np.ndarray,
        kind: Literal["covariance", "correlation"] = "covariance", ridge: float | None = None,
    ) -> CovarianceMatrix:
        """Symmetrize values and derive the psd and repair flags from their spectrum."""
        matrix = symmetrize(values)
        low, high = eigen_extremes(matrix)
        psd = low >= -PSD_TOLERANCE * max(abs(high), abs(low), np.finfo(float).tiny)
        needs_repair = low <= 0.0 or high / low > MAX_CONDITION
        return cls(
            day=day, values=matrix, kind=kind, psd=psd, needs_repair=needs_repair, ridge=ridge
        )

    @property
    def n_assets(self) -> int:
        """M, the matrix dimension."""
        return int(self.values.shape[0])


class CovMatrixSeries(DCWBaseModel):
    """Dated sequence of matrices sharing one asset ordering."""

    tickers: tuple[str, ...] = Field(min_length=1)
    matrices: tuple[CovarianceMatrix, ...]

    @model_validator(mode="after")
    def _check_series(self) -> CovMatrixSeries:
        m = len(self.tickers)
        if len(set(self.tickers)) != m:
            raise ValueError("tickers must be unique")
        for mat in self.matrices:
            if mat.n_assets != m:
                raise ValueError(f"matrix on {mat.day} is {mat.n_assets}x{mat.n_assets}, expected {m}")
        days = [mat.day for mat in self.matrices]
        if any(b <= a for a, b in zip(days, days[1:])):
            raise ValueError("dates must be strictly increasing")
        return self

    def __len__(self) -> int:
        return len(self.matrices)

    @property
    def dates(self) -> list[date]:
        """Dates in order."""
        return [mat.day for mat in self.matrices]

    def stack(self) -> np.ndarray:
        """All matrices as a (T, M, M) array."""
        if not self.matrices:
            return np.zeros((0, len(self.tickers), len(self.tickers)))
        return np.stack([mat.values for mat in self.matrices])

    def select(self, dates: Sequence[date]) -> CovMatrixSeries:
        """The sub-series on the given dates.

        Raises:
            MisalignedDatesError: If a date is absent
        """
        index = {mat.day: mat for mat in self.matrices}
        missing = [d for d in dates if d not in index]
        if missing:
            raise MisalignedDatesError("covariance series", missing)
        return CovMatrixSeries(tickers=self.tickers, matrices=tuple(index[d] for d in dates))


class WeightSeries(DCWBaseModel):
    """Dated portfolio weight vectors, each summing to one.

    Attributes:
        tickers: Asset ordering of the columns
        dates: One date per row, strictly increasing
        weights: T x M weight matrix
    """

    sum_tolerance: ClassVar[float] = 1e-9

    tickers: tuple[str, ...]
    dates: tuple[date, ...]
    weights: FloatArray

    @model_validator(mode="after")
    def _check_weights(self) -> WeightSeries:
        if self.weights.shape != (len(self.dates), len(self.tickers)):
            raise ValueError("weights must have one row per date and one column per ticker")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise ValueError("dates must be strictly increasing")
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite")
        if len(self.dates):
            worst = float(np.max(np.abs(self.weights.sum(axis=1) - 1.0)))
            if worst > self.sum_tolerance:
                raise ValueError(f"weights must sum to one (worst deviation {worst:.3g})")
        return self

    def __len__(self) -> int:
        return len(self.dates)

    def select(self, dates: Sequence[date]) -> np.ndarray:
        """Rows for the given dates.

        Raises:
            MisalignedDatesError: If a date is absent
        """
        index = {d: i for i, d in enumerate(self.dates)}
        missing = [d for d in dates if d not in index]
        if missing:
            raise MisalignedDatesError("weight series", missing)
        return self.weights[[index[d] for d in dates]]


class RealizedWeightSeries(WeightSeries):
    """Realized minimum-variance weights nu_t, one vector per day."""

    sum_tolerance: ClassVar[float] = 1e-10


class BandwidthResult(DCWBaseModel):
    """Kernel bandwidth H and the integer lag bound l = min(floor(H), J - 1)."""

    bandwidth: float = Field(ge=0)
    lag: int = Field(ge=0)
    n_returns: int = Field(ge=1)

    @model_validator(mode="after")
    def _check_lag(self) -> BandwidthResult:
        if self.lag != min(math.floor(self.bandwidth), self.n_returns - 1):
            raise ValueError("lag must equal min(floor(H), J - 1)")
        return self

    @classmethod
    def from_bandwidth(cls, bandwidth: float, n_returns: int) -> BandwidthResult:
        """Derive the lag bound from H and J."""
        return cls(
            bandwidth=bandwidth,
            lag=min(math.floor(bandwidth), n_returns - 1),
            n_returns=n_returns,
        )


def parzen_weight(x: float) -> float:
    """Parzen kernel evaluated at |x|.

    Example:
        >>> parzen_weight(0.5)
        0.25
    """
    x = abs(x)
    if x <= 0.5:
        return 1.0 - 6.0 * x**2 + 6.0 * x**3
    if x <= 1.0:
        return 2.0 * (1.0 - x) ** 3
    return 0.0


def _check_same_assets(panel: ReturnPanel, binned: BinnedReturnPanel) -> None:
    if panel.tickers != binned.tickers:
        raise DomainError("return panel and binned panel have different asset orderings")


def bandwidth(panel: ReturnPanel, binned: BinnedReturnPanel) -> BandwidthResult:
    """Average over assets of the per-asset Parzen bandwidth.

    For asset i the term is 3.51 * J^(3/5) * (omega2_i / iv_i)^(2/5) where
    omega2_i = sum_j r_ij^2 / (2J) estimates the noise variance from the
    synchronized returns and iv_i = sum_j rtilde_ij^2 is the binned realized variance.

    Raises:
        DegenerateVarianceError: If an asset's binned sum of squares is zero
    """
    _check_same_assets(panel, binned)
    r = np.asarray(panel.returns)
    n = panel.n_returns
    noise = (r**2).sum(axis=0) / (2.0 * n)
    integrated = (np.asarray(binned.returns) ** 2).sum(axis=0)
    for i, total in enumerate(integrated):
        if total <= 0.0:
            raise DegenerateVarianceError(panel.tickers[i])
    terms = 3.51 * n ** 0.6 * (noise / integrated) ** 0.4
    return BandwidthResult.from_bandwidth(float(np.mean(terms)), n)


def autocov_gamma(panel: ReturnPanel, h: int) -> np.ndarray:
    """Realized autocovariance at lag h: sum_j r_j r_{j-h}' (transposed for h < 0).

    Raises:
        LagOutOfRangeError: If |h| >= J
    """
    n = panel.n_returns
    if abs(h) >= n:
        raise LagOutOfRangeError(h, n)
    r = np.asarray(panel.returns)
    lag = abs(h)
    gamma = r[lag:].T @ r[: n - lag]
    return gamma if h >= 0 else gamma.T


def realized_kernel(
    panel: ReturnPanel, binned: BinnedReturnPanel, *, bandwidth_override: float | None = None
) -> CovarianceMatrix:
    """Parzen realized-kernel covariance of one day.

    S = Gamma_0 + sum_{h=1}^{l} k(h/H) (Gamma_h + Gamma_h'), symmetrized. Values
    are not repaired here; the needs_repair flag records whether they must be.

    Args:
        panel: Synchronized intraday returns
        binned: Binned returns used for the bandwidth
        bandwidth_override: Use this H instead of the data-driven one

    Raises:
        InsufficientDataError: If J < 2
        DegenerateVarianceError: Propagated from bandwidth selection
    """
    if panel.n_returns < 2:
        raise InsufficientDataError(f"returns on {panel.day}", panel.n_returns, 2)
    if bandwidth_override is None:
        bw = bandwidth(panel, binned)
    else:
        bw = BandwidthResult.from_bandwidth(bandwidth_override, panel.n_returns)
    total = autocov_gamma(panel, 0)
    for h in range(1, bw.lag + 1):
        weight = parzen_weight(h / bw.bandwidth)
        if weight == 0.0:
            continue
        gamma = autocov_gamma(panel, h)
        total = total + weight * (gamma + gamma.T)
    result = CovarianceMatrix.from_values(panel.day, total)
    if result.needs_repair:
        logger.debug("Realized kernel on %s is not invertible as estimated", panel.day)
    return result


def ensure_invertible(matrix: CovarianceMatrix, ridge: float = 1e-8) -> CovarianceMatrix:
    """Add ridge * trace / M to the diagonal when the matrix cannot be inverted safely.

    A matrix whose smallest eigenvalue is <= 0 or whose condition number exceeds 1e12
    is repaired; the relative ridge is recorded on the result. A matrix with zero
    trace is shifted by the ridge itself.
    """
    if not matrix.needs_repair:
        return matrix
    m = matrix.n_assets
    trace = float(np.trace(matrix.values))
    shift = ridge * (trace / m if trace > 0 else 1.0)
    repaired = CovarianceMatrix.from_values(
        matrix.day, matrix.values + shift * np.eye(m), kind=matrix.kind, ridge=ridge
    )
    logger.debug("Applied ridge %.3g to matrix on %s", ridge, matrix.day)
    return repaired


def realized_correlation(matrix: CovarianceMatrix) -> CovarianceMatrix:
    """Correlation matrix D^-1 S D^-1 with D = diag(sqrt(S_ii)); unit diagonal exactly.

    Raises:
        DomainError: If a diagonal entry is not positive
    """
    diag = np.diag(matrix.values)
    if np.any(diag <= 0):
        raise DomainError(f"non-positive variance on {matrix.day}; correlation undefined")
    inv_sd = 1.0 / np.sqrt(diag)
    corr = np.clip(matrix.values * np.outer(inv_sd, inv_sd), -1.0, 1.0)
    corr = symmetrize(corr)
    np.fill_diagonal(corr, 1.0)
    return CovarianceMatrix.from_values(matrix.day, corr, kind="correlation")


def realized_weights(matrix: CovarianceMatrix) -> np.ndarray:
    """Realized minimum-variance weights (i'S^-1 i)^-1 S^-1 i.

    Raises:
        SingularMatrixError: If S is singular or ill-conditioned (repair it first)
    """
    x = solve_symmetric(matrix.values, np.ones(matrix.n_assets), f"realized matrix on {matrix.day}")
    return x / x.sum()


def realized_weights_quadutil(
    matrix: CovarianceMatrix, returns: np.ndarray, gamma: float
) -> np.ndarray:
    """Unnormalized quadratic-utility weights gamma^-1 S^-1 r.

    Raises:
        DomainError: If gamma is not positive
        SingularMatrixError: If S is singular
    """
    if gamma <= 0:
        raise DomainError(f"risk aversion must be positive, got {gamma}")
    r = np.asarray(returns, dtype=np.float64)
    return solve_symmetric(matrix.values, r, f"realized matrix on {matrix.day}") / gamma


def realized_measures_for_day(
    streams: Mapping[str, TickSeries],
    day: date,
    tickers: Sequence[str],
    cfg: RealizedConfig | None = None,
    session: TradingSession | None = None,
) -> CovarianceMatrix:
    """Realized-kernel covariance of one day in percent units.

    Runs refresh-time synchronization, log-returns, binning and the kernel, with
    returns scaled by cfg.percent_scale.
    """
    cfg = cfg or RealizedConfig()
    synced = refresh_time_sync(streams, day, tickers)
    panel = intraday_returns(synced).scaled(cfg.percent_scale)
    binned = bin_returns(streams, day, session, cfg.bin_minutes, tickers).scaled(cfg.percent_scale)
    return realized_kernel(panel, binned)


def build_cov_series(
    ticks: TickSeries,
    tickers: Sequence[str],
    cfg: RealizedConfig | None = None,
    session: TradingSession | None = None,
    threads: int = 1,
) -> CovMatrixSeries:
    """Realized-kernel covariances for every trading day in the ticks.

    Days on which some asset cannot be synchronized or binned are skipped with a
    warning.

    Raises:
        EmptyInputError: If no day yields a matrix
    """
    session = session or TradingSession()
    by_day = ticks.split_by_day(session.timezone)

    def one_day(item: tuple[date, TickSeries]) -> CovarianceMatrix | None:
        day, day_ticks = item
        try:
            return realized_measures_for_day(day_ticks.split_by_ticker(), day, tickers, cfg, session)
        except (DataError, DegenerateVarianceError) as e:
            logger.warning("Skipping %s: %s", day, e)
            return None

    results = parallel_map(one_day, list(by_day.items()), threads)
    matrices = tuple(m for m in results if m is not None)
    if not matrices:
        raise EmptyInputError("tick data (no day produced a realized matrix)")
    logger.info("Built %d realized matrices (%d days skipped)", len(matrices), len(results) - len(matrices))
    return CovMatrixSeries(tickers=tuple(tickers), matrices=matrices)


def realized_weight_series(series: CovMatrixSeries, ridge: float = 1e-8) -> RealizedWeightSeries:
    """Realized weights nu_t of every day, repairing matrices first when needed."""
    rows = [realized_weights(ensure_invertible(mat, ridge)) for mat in series.matrices]
    weights = np.vstack(rows) if rows else np.zeros((0, len(series.tickers)))
    return RealizedWeightSeries(tickers=series.tickers, dates=tuple(series.dates), weights=weights)


def save_cov_series(series: CovMatrixSeries, path: Path | str) -> None:
    """Write the upper triangles as long-format CSV ``date,i,j,value``.

    The first line is ``# assets: T1,T2,...`` giving the asset ordering.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    m = len(series.tickers)
    rows, cols = np.triu_indices(m)
    frames = [
        pd.DataFrame({"date": mat.day.isoformat(), "i": rows, "j": cols, "value": mat.values[rows, cols]})
        for mat in series.matrices
    ]
    table = (
        pd.concat(frames, ignore_index=True)
        if frames
        else pd.DataFrame(columns=["date", "i", "j", "value"])
    )
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(f"{ASSETS_PREFIX} {','.join(series.tickers)}\n")
        table.to_csv(f, index=False, lineterminator="\n")


def load_cov_series(path: Path | str, tickers: Sequence[str] | None = None) -> CovMatrixSeries:
    """Read a series written by save_cov_series.

    Args:
        path: CSV file to read
        tickers: Expected asset ordering; a mismatch is an error

    Raises:
        ParseError: If the assets line is missing or mismatched, an index is out of
            range, or a day does not list every upper-triangle cell exactly once
    """
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            first = f.readline().strip()
    except OSError as e:
        raise ParseError(str(path), None, str(e)) from e
    if not first.startswith(ASSETS_PREFIX):
        raise ParseError(str(path), 1, f"first line must start with {ASSETS_PREFIX!r}")
    names = tuple(t.strip() for t in first[len(ASSETS_PREFIX):].split(",") if t.strip())
    if not names:
        raise ParseError(str(path), 1, "no assets listed")
    if tickers is not None and tuple(tickers) != names:
        raise ParseError(
            str(path), 1, f"asset ordering {','.join(names)} does not match {','.join(tickers)}"
        )

    table = pd.read_csv(path, skiprows=1, float_precision="round_trip", dtype={"date": str})
    if list(table.columns) != ["date", "i", "j", "value"]:
        raise ParseError(str(path), 2, "expected header 'date,i,j,value'")
    m = len(names)
    bad = (table["i"] < 0) | (table["j"] >= m) | (table["i"] > table["j"])
    if bad.any():
        raise ParseError(str(path), int(np.flatnonzero(bad.to_numpy())[0]) + 3, "index outside the upper triangle")

    repeated = table.duplicated(subset=["date", "i", "j"]).to_numpy()
    if repeated.any():
        row = int(np.flatnonzero(repeated)[0])
        raise ParseError(
            str(path), row + 3, f"cell ({table['i'].iat[row]},{table['j'].iat[row]}) repeated on {table['date'].iat[row]}"
        )
    cells = m * (m + 1) // 2
    counts = table.groupby("date", sort=False)["i"].transform("size").to_numpy()
    incomplete = counts != cells
    if incomplete.any():
        row = int(np.flatnonzero(incomplete)[0])
        raise ParseError(
            str(path), row + 3,
            f"{table['date'].iat[row]} has {counts[row]} of {cells} upper-triangle cells",
        )
    non_finite = ~np.isfinite(table["value"].to_numpy(dtype=float))
    if non_finite.any():
        raise ParseError(str(path), int(np.flatnonzero(non_finite)[0]) + 3, "value is not finite")

    matrices = []
    for day_text, group in table.groupby("date", sort=True):
        values = np.zeros((m, m))
        i = group["i"].to_numpy(dtype=int)
        j = group["j"].to_numpy(dtype=int)
        values[i, j] = group["value"].to_numpy(dtype=float)
        values[j, i] = values[i, j]
        matrices.append(CovarianceMatrix.from_values(date.fromisoformat(str(day_text)), values))
    logger.debug("Loaded %d matrices from %s", len(matrices), path)
    return CovMatrixSeries(tickers=names, matrices=tuple(matrices))
