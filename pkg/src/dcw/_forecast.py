"""Fitting and one-step-ahead forecasting for the five allocation strategies.

VT, DCC and RW forecast a covariance matrix that is then turned into weights by
the allocation module. DCW and Naive forecast weights directly.

All forecast functions receive lagged state only, so a forecast dated t can
never see data from day t or later.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from datetime import date

import numpy as np
import statsmodels.api as sm
from pydantic import Field, model_validator
from scipy.optimize import minimize
from scipy.signal import lfilter

from dcw._base import DCWBaseModel, FloatArray
from dcw._exceptions import (
    DegenerateNormalizationError,
    DomainError,
    FitError,
    InsufficientDataError,
    ParseError,
)
from dcw._labeled_enum import Strategy
from dcw._realized import CovarianceMatrix, ensure_invertible
from dcw._utils import parallel_map, symmetrize, upper_triangle

logger = logging.getLogger(__name__)

HAR_LAGS = 22
HAR_MIN_LENGTH = HAR_LAGS + 11
STATIONARITY_MARGIN = 1e-6
NORMALIZATION_TOLERANCE = 1e-8


class HarParams(DCWBaseModel):
    """HAR coefficients, one row (alpha0, alpha1, alpha2, alpha3) per asset."""

    tickers: tuple[str, ...]
    coefficients: FloatArray

    @model_validator(mode="after")
    def _check_shape(self) -> HarParams:
        if self.coefficients.shape != (len(self.tickers), 4):
            raise ValueError("coefficients must be an M x 4 matrix")
        if not np.all(np.isfinite(self.coefficients)):
            raise ValueError("coefficients must be finite")
        return self


class DccParams(DCWBaseModel):
    """Scalar DCC loadings (entering squared) and the correlation target."""

    a: float = Field(ge=0)
    b: float = Field(ge=0)
    target: FloatArray

    @model_validator(mode="after")
    def _check_params(self) -> DccParams:
        if self.a**2 + self.b**2 >= 1.0:
            raise ValueError(f"a^2 + b^2 must be < 1, got {self.a**2 + self.b**2:.6f}")
        t = self.target
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise ValueError("target must be a square matrix")
        if np.max(np.abs(t - t.T)) > 1e-12 or np.any(np.diag(t) != 1.0):
            raise ValueError("target must be symmetric with unit diagonal")
        return self


class DccState(DCWBaseModel):
    """Lagged inputs of the DCC recursion: R_{t-1} and the realized P_{t-1}."""

    prev_corr: FloatArray
    prev_realized: FloatArray

    @model_validator(mode="after")
    def _unit_diagonal(self) -> DccState:
        for name in ("prev_corr", "prev_realized"):
            if np.any(np.diag(getattr(self, name)) != 1.0):
                raise ValueError(f"{name} must have a unit diagonal")
        return self


class DcwParams(DCWBaseModel):
    """Diagonal DCW(1,1) coefficients per asset with the targeting vector.

    Attributes:
        tickers: Asset ordering
        a: Loading on the lagged realized weight
        b: Loading on the lagged forecast
        target: Sample mean of the realized weights (sums to one)
        seed: Recursion start omega_0
    """

    tickers: tuple[str, ...]
    a: FloatArray
    b: FloatArray
    target: FloatArray
    seed: FloatArray

    @model_validator(mode="after")
    def _check_params(self) -> DcwParams:
        m = len(self.tickers)
        for name in ("a", "b", "target", "seed"):
            if getattr(self, name).shape != (m,):
                raise ValueError(f"{name} must have one entry per asset")
        if abs(float(self.target.sum()) - 1.0) > 1e-10:
            raise ValueError("target weights must sum to one")
        if np.any(np.abs(self.b) >= 1.0):
            raise ValueError("|b| must be < 1 for every asset")
        return self

    @property
    def persistence(self) -> np.ndarray:
        """a + b per asset."""
        return np.asarray(self.a + self.b)


class CovarianceForecast(DCWBaseModel):
    """Forecast covariance matrix Omega_t for day t."""

    day: date
    values: FloatArray
    strategy: Strategy
    ridge: float | None = None

    @model_validator(mode="after")
    def _symmetric(self) -> CovarianceForecast:
        v = self.values
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("forecast must be a square matrix")
        if np.max(np.abs(v - v.T)) > 1e-12 * max(1.0, float(np.max(np.abs(v)))):
            raise ValueError("forecast must be symmetric")
        return self


class WeightForecast(DCWBaseModel):
    """Forecast weights omega_t for day t.

    Attributes:
        weights: Normalized weights (sum to one)
        raw: Recursion output before normalization (DCW only)
        divisor: Coordinate sum used for normalization
    """

    day: date
    weights: FloatArray
    strategy: Strategy
    raw: FloatArray | None = None
    divisor: float = 1.0

    @model_validator(mode="after")
    def _sums_to_one(self) -> WeightForecast:
        if abs(float(self.weights.sum()) - 1.0) > 1e-10:
            raise ValueError("forecast weights must sum to one")
        return self


class VarianceForecast(DCWBaseModel):
    """Per-asset HAR variance forecasts and the indices that were floored."""

    variances: FloatArray
    floored: tuple[int, ...] = ()


class FitTrace(DCWBaseModel):
    """Best-so-far objective after each evaluation of a least-squares fit."""

    objectives: FloatArray
    method: str

    @property
    def final(self) -> float:
        """Objective at the accepted optimum."""
        return float(self.objectives[-1])


class CrossSectionSummary(DCWBaseModel):
    """Summary statistics of a cross-section of per-asset values."""

    mean: float
    std: float
    min: float
    p05: float
    median: float
    p95: float
    max: float
    count: int


def summarize_cross_section(values: Sequence[float] | np.ndarray) -> CrossSectionSummary:
    """Mean, dispersion and percentiles of finite values (NaNs are ignored).

    Raises:
        DomainError: If no finite value is given
    """
    arr = np.asarray(values, dtype=np.float64)
    arr = arr[np.isfinite(arr)]
    if arr.size == 0:
        raise DomainError("no finite values to summarize")
    p05, median, p95 = np.percentile(arr, [5, 50, 95])
    return CrossSectionSummary(
        mean=float(arr.mean()),
        std=float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
        min=float(arr.min()),
        p05=float(p05),
        median=float(median),
        p95=float(p95),
        max=float(arr.max()),
        count=int(arr.size),
    )


def har_design(series: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Response and regressors [1, s_{t-1}, 5-day mean, 22-day mean] for t >= 22."""
    s = np.asarray(series, dtype=np.float64)
    csum = np.concatenate([[0.0], np.cumsum(s)])
    t = np.arange(HAR_LAGS, len(s))
    daily = s[t - 1]
    weekly = (csum[t] - csum[t - 5]) / 5.0
    monthly = (csum[t] - csum[t - HAR_LAGS]) / HAR_LAGS
    design = np.column_stack([np.ones(len(t)), daily, weekly, monthly])
    return s[t], design


def _har_fit_one(item: tuple[str, np.ndarray]) -> np.ndarray:
    ticker, series = item
    response, design = har_design(series)
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise FitError("HAR", f"collinear regressors for {ticker!r}")
    result = sm.OLS(response, design).fit()
    return np.asarray(result.params, dtype=np.float64)


def har_fit(variances: np.ndarray, tickers: Sequence[str], threads: int = 1) -> HarParams:
    """OLS fit of the HAR recursion for every asset.

    Args:
        variances: T x M daily realized variances s^2_{i,t}
        tickers: Asset ordering of the columns
        threads: Worker threads for the per-asset map

    Returns:
        HarParams with one coefficient row per asset

    Raises:
        InsufficientDataError: If T <= 32
        FitError: If an asset's regressors are collinear (e.g. a constant series)
    """
    s = np.asarray(variances, dtype=np.float64)
    if s.ndim == 1:
        s = s[:, None]
    if s.shape[0] < HAR_MIN_LENGTH:
        raise InsufficientDataError("HAR variance series", s.shape[0], HAR_MIN_LENGTH)
    items = [(t, s[:, i]) for i, t in enumerate(tickers)]
    rows = parallel_map(_har_fit_one, items, threads)
    logger.debug("Fitted HAR for %d assets on %d days", len(rows), s.shape[0])
    return HarParams(tickers=tuple(tickers), coefficients=np.vstack(rows))


def har_forecast(params: HarParams, history: np.ndarray, floor: float = 1e-8) -> VarianceForecast:
    """One-step HAR variance forecasts from the last 22 daily variances.

    Args:
        params: Fitted coefficients
        history: At least 22 x M lagged variances, most recent last
        floor: Value replacing forecasts below it

    Raises:
        InsufficientDataError: If fewer than 22 lags are given
    """
    h = np.asarray(history, dtype=np.float64)
    if h.ndim == 1:
        h = h[:, None]
    if h.shape[0] < HAR_LAGS:
        raise InsufficientDataError("HAR history", h.shape[0], HAR_LAGS)
    h = h[-HAR_LAGS:]
    regressors = np.stack([np.ones(h.shape[1]), h[-1], h[-5:].mean(axis=0), h.mean(axis=0)], axis=1)
    raw = (params.coefficients * regressors).sum(axis=1)
    floored = np.flatnonzero(raw < floor)
    if floored.size:
        logger.debug("Floored %d negative HAR forecast(s)", floored.size)
    return VarianceForecast(
        variances=np.maximum(raw, floor), floored=tuple(int(i) for i in floored)
    )


def vt_forecast(variances: np.ndarray, day: date) -> CovarianceForecast:
    """Volatility-timing covariance: diagonal with the forecast variances.

    Raises:
        DomainError: If a variance is not positive
    """
    v = np.asarray(variances, dtype=np.float64)
    if np.any(v <= 0):
        raise DomainError("variance forecasts must be positive")
    return CovarianceForecast(day=day, values=np.diag(v), strategy=Strategy.VT)


def _targeted_recursion(
    observed: np.ndarray, target: np.ndarray, seed: np.ndarray, load: float, persist: float
) -> np.ndarray:
    """Fitted path f_t = (1 - load - persist) target + load obs_{t-1} + persist f_{t-1}, f_0 = seed."""
    x = (1.0 - load - persist) * target + load * observed[:-1]
    if len(x) == 0:
        return seed[None, :].copy()
    fitted, _ = lfilter([1.0], [1.0, -persist], x, axis=0, zi=(persist * seed)[None, :])
    return np.vstack([seed[None, :], fitted])


def _grid_then_simplex(
    objective: Callable[[float, float], float],
    grid: list[tuple[float, float]],
    project: Callable[[float, float], tuple[float, float]],
    model: str,
) -> tuple[tuple[float, float], FitTrace]:
    """Coarse grid search followed by penalized Nelder-Mead refinement.

    Grid points are visited in order of distance from the origin and only a strictly
    better value replaces the incumbent, so ties resolve toward (0, 0). The simplex
    result is accepted only if strictly better than the grid optimum.
    """
    evaluated: list[float] = []
    best = (math.nan, math.nan)
    best_value = math.inf
    for point in sorted(grid, key=lambda p: (p[0] ** 2 + p[1] ** 2, p)):
        value = objective(*point)
        evaluated.append(value)
        if value < best_value:
            best, best_value = point, value
    if not math.isfinite(best_value):
        raise FitError(model, "objective is not finite anywhere on the grid")

    def penalized(x: np.ndarray) -> float:
        px, py = project(float(x[0]), float(x[1]))
        value = objective(px, py)
        evaluated.append(value)
        distance = math.hypot(x[0] - px, x[1] - py)
        return value + 1e3 * distance * (1.0 + abs(value))

    method = "grid"
    if best_value > 0.0:
        result = minimize(
            penalized, np.array(best), method="Nelder-Mead",
            options={"xatol": 1e-7, "fatol": 1e-14, "maxiter": 400},
        )
        candidate = project(float(result.x[0]), float(result.x[1]))
        candidate_value = objective(*candidate)
        if math.isfinite(candidate_value) and candidate_value < best_value:
            best, best_value = candidate, candidate_value
            method = "nelder-mead"
        else:
            logger.debug("%s simplex refinement did not improve on the grid", model)
    evaluated.append(best_value)
    trace = np.minimum.accumulate(np.asarray(evaluated, dtype=np.float64))
    return best, FitTrace(objectives=trace, method=method)


def _as_corr_stack(corrs: np.ndarray | Sequence[CovarianceMatrix]) -> np.ndarray:
    if isinstance(corrs, np.ndarray):
        return np.asarray(corrs, dtype=np.float64)
    return np.stack([c.values for c in corrs])


def dcc_target(corrs: np.ndarray) -> np.ndarray:
    """Sample mean of realized correlation matrices with an exact unit diagonal."""
    target = symmetrize(np.mean(corrs, axis=0))
    np.fill_diagonal(target, 1.0)
    return target


def dcc_objective(corrs: np.ndarray, target: np.ndarray, a: float, b: float) -> float:
    """Sum over t of the squared Frobenius distance between P_t and R_t(a, b)."""
    observed = upper_triangle(corrs)
    target_vec = upper_triangle(target)
    fitted = _targeted_recursion(observed, target_vec, target_vec, a * a, b * b)
    return float(2.0 * np.sum((observed - fitted) ** 2))


def dcc_fit_with_trace(
    corrs: np.ndarray | Sequence[CovarianceMatrix], grid_points: int = 21, min_length: int = 100
) -> tuple[DccParams, FitTrace]:
    """Least-squares fit of the scalar DCC recursion with correlation targeting.

    The target P-bar is the sample mean of the realized correlations and the
    recursion starts at R_0 = P-bar. (a, b) is searched over
    {a, b >= 0, a^2 + b^2 <= 1 - 1e-6}.

    Args:
        corrs: T x M x M realized correlation matrices (or CovarianceMatrix records)
        grid_points: Grid resolution per axis before simplex refinement
        min_length: Minimum T

    Returns:
        Tuple of (DccParams, FitTrace)

    Raises:
        InsufficientDataError: If T < min_length
        FitError: If the objective cannot be evaluated
    """
    stack = _as_corr_stack(corrs)
    if stack.shape[0] < min_length:
        raise InsufficientDataError("DCC correlation series", stack.shape[0], min_length)
    target = dcc_target(stack)
    if stack.shape[1] < 2:
        return DccParams(a=0.0, b=0.0, target=target), FitTrace(objectives=[0.0], method="grid")
    radius = math.sqrt(1.0 - STATIONARITY_MARGIN)

    def project(a: float, b: float) -> tuple[float, float]:
        a, b = max(a, 0.0), max(b, 0.0)
        norm = math.hypot(a, b)
        if norm > radius:
            a, b = a * radius / norm, b * radius / norm
        return a, b

    axis = np.linspace(0.0, 1.0, grid_points)
    grid = [(float(a), float(b)) for a in axis for b in axis if a * a + b * b <= radius**2]
    (a, b), trace = _grid_then_simplex(
        lambda a, b: dcc_objective(stack, target, a, b), grid, project, "DCC"
    )
    logger.debug("DCC fit a=%.4f b=%.4f objective=%.6g (%s)", a, b, trace.final, trace.method)
    return DccParams(a=a, b=b, target=target), trace


def dcc_fit(
    corrs: np.ndarray | Sequence[CovarianceMatrix], grid_points: int = 21, min_length: int = 100
) -> DccParams:
    """Least-squares DCC fit (see dcc_fit_with_trace)."""
    return dcc_fit_with_trace(corrs, grid_points, min_length)[0]


def dcc_forecast(params: DccParams, state: DccState) -> np.ndarray:
    """R_t = (1 - a^2 - b^2) P-bar + a^2 P_{t-1} + b^2 R_{t-1}, unit diagonal exactly."""
    a2, b2 = params.a**2, params.b**2
    corr = (1.0 - a2 - b2) * params.target + a2 * state.prev_realized + b2 * state.prev_corr
    corr = symmetrize(corr)
    np.fill_diagonal(corr, 1.0)
    return corr


def dcc_covariance(corr: np.ndarray, variances: np.ndarray, day: date) -> CovarianceForecast:
    """Omega_t = D_t R_t D_t with D_t = diag(sqrt(sigma^2)); the diagonal equals sigma^2 exactly.

    Raises:
        DomainError: If a variance is not positive
    """
    v = np.asarray(variances, dtype=np.float64)
    if np.any(v <= 0):
        raise DomainError("variance forecasts must be positive")
    sd = np.sqrt(v)
    omega = symmetrize(np.asarray(corr) * np.outer(sd, sd))
    np.fill_diagonal(omega, v)
    return CovarianceForecast(day=day, values=omega, strategy=Strategy.DCC)


def rw_forecast(prev: CovarianceMatrix, day: date, ridge: float = 1e-8) -> CovarianceForecast:
    """Random-walk forecast Omega_t = S_{t-1}, repaired if it cannot be inverted."""
    repaired = ensure_invertible(prev, ridge)
    return CovarianceForecast(
        day=day, values=repaired.values, strategy=Strategy.RW, ridge=repaired.ridge
    )


def naive_weights(n_assets: int, day: date) -> WeightForecast:
    """Equal weights 1/M.

    Raises:
        DomainError: If n_assets < 1
    """
    if n_assets < 1:
        raise DomainError("at least one asset is required")
    return WeightForecast(
        day=day, weights=np.full(n_assets, 1.0 / n_assets), strategy=Strategy.NAIVE
    )


def dcw_objective(nu: np.ndarray, target: float, a: float, b: float) -> float:
    """Conditional sum of squares of one asset's DCW recursion started at the target."""
    column = np.asarray(nu, dtype=np.float64)[:, None]
    t = np.array([target])
    fitted = _targeted_recursion(column, t, t, a, b)
    return float(np.sum((column - fitted) ** 2))


def _dcw_fit_one(
    item: tuple[str, np.ndarray, float], grid_points: int
) -> tuple[float, float, FitTrace]:
    ticker, nu, target = item
    bound = 1.0 - STATIONARITY_MARGIN

    def project(a: float, b: float) -> tuple[float, float]:
        return a, min(max(b, -bound), bound)

    grid = [(0.0, 0.0)] + [
        (float(a), float(b))
        for a in np.linspace(-0.2, 1.0, grid_points)
        for b in np.linspace(-0.95, 0.95, grid_points)
    ]
    (a, b), trace = _grid_then_simplex(
        lambda a, b: dcw_objective(nu, target, a, b), grid, project, f"DCW[{ticker}]"
    )
    return a, b, trace


def dcw_fit_with_trace(
    weights: np.ndarray, tickers: Sequence[str], grid_points: int = 21, min_length: int = 100,
    threads: int = 1,
) -> tuple[DcwParams, list[FitTrace]]:
    """Equation-by-equation least-squares fit of the diagonal DCW(1,1) recursion.

    For asset i, omega_{i,t} = (1 - a_i - b_i) omegabar_i + a_i nu_{i,t-1} + b_i omega_{i,t-1}
    with omegabar the sample mean of nu and omega_0 = omegabar. Only |b_i| < 1 is
    imposed; a_i is unconstrained.

    Args:
        weights: T x M realized weights nu_t
        tickers: Asset ordering of the columns
        grid_points: Grid resolution per axis before simplex refinement
        min_length: Minimum T
        threads: Worker threads for the per-asset map

    Returns:
        Tuple of (DcwParams, one FitTrace per asset)

    Raises:
        InsufficientDataError: If T < min_length
    """
    nu = np.asarray(weights, dtype=np.float64)
    if nu.shape[0] < min_length:
        raise InsufficientDataError("DCW realized weight series", nu.shape[0], min_length)
    target = nu.mean(axis=0)
    items = [(t, nu[:, i], float(target[i])) for i, t in enumerate(tickers)]
    fits = parallel_map(lambda item: _dcw_fit_one(item, grid_points), items, threads)
    params = DcwParams(
        tickers=tuple(tickers),
        a=np.array([f[0] for f in fits]),
        b=np.array([f[1] for f in fits]),
        target=target,
        seed=target,
    )
    logger.debug(
        "DCW fit: mean a=%.4f mean b=%.4f over %d assets",
        float(params.a.mean()), float(params.b.mean()), len(tickers),
    )
    return params, [f[2] for f in fits]


def dcw_fit(
    weights: np.ndarray, tickers: Sequence[str], grid_points: int = 21, min_length: int = 100,
    threads: int = 1,
) -> DcwParams:
    """Diagonal DCW(1,1) fit (see dcw_fit_with_trace)."""
    return dcw_fit_with_trace(weights, tickers, grid_points, min_length, threads)[0]


def dcw_fitted_series(params: DcwParams, weights: np.ndarray) -> np.ndarray:
    """In-sample raw DCW fitted values, one row per observation, starting at the seed."""
    nu = np.asarray(weights, dtype=np.float64)
    columns = [
        _targeted_recursion(
            nu[:, [i]], params.target[[i]], params.seed[[i]], float(params.a[i]), float(params.b[i])
        )[:, 0]
        for i in range(len(params.tickers))
    ]
    return np.column_stack(columns)


def dcw_forecast(
    params: DcwParams, prev_nu: np.ndarray, prev_omega: np.ndarray, day: date
) -> WeightForecast:
    """One-step DCW forecast normalized by its coordinate sum.

    Args:
        params: Fitted DCW coefficients
        prev_nu: Realized weights of day t-1
        prev_omega: Recursion value of day t-1 (raw or normalized, per feedback setting)
        day: Day being forecast

    Raises:
        DegenerateNormalizationError: If the raw forecast sums to within 1e-8 of zero
    """
    raw = (
        (1.0 - params.a - params.b) * params.target
        + params.a * np.asarray(prev_nu)
        + params.b * np.asarray(prev_omega)
    )
    divisor = float(raw.sum())
    if abs(divisor) < NORMALIZATION_TOLERANCE:
        raise DegenerateNormalizationError(divisor)
    return WeightForecast(
        day=day, weights=raw / divisor, strategy=Strategy.DCW, raw=raw, divisor=divisor
    )


class ModelParams(DCWBaseModel):
    """Fitted parameters of one strategy in one in-sample window."""

    strategy: Strategy
    window: str
    tickers: tuple[str, ...]
    har: HarParams | None = None
    dcc: DccParams | None = None
    dcw: DcwParams | None = None

    def to_text(self) -> str:
        """Flat ``key=value`` text, floats written with repr for an exact round trip."""
        lines = [
            f"strategy={self.strategy.label}",
            f"window={self.window}",
            f"tickers={','.join(self.tickers)}",
        ]
        if self.har is not None:
            for i, ticker in enumerate(self.har.tickers):
                for k in range(4):
                    lines.append(f"alpha{k}.{ticker}={float(self.har.coefficients[i, k])!r}")
        if self.dcc is not None:
            lines.append(f"dcc.a={self.dcc.a!r}")
            lines.append(f"dcc.b={self.dcc.b!r}")
            rows, cols = np.triu_indices(len(self.tickers), k=1)
            for i, j in zip(rows, cols):
                lines.append(f"dcc.target.{i}.{j}={float(self.dcc.target[i, j])!r}")
        if self.dcw is not None:
            for name in ("a", "b", "target", "seed"):
                values = getattr(self.dcw, name)
                for i, ticker in enumerate(self.dcw.tickers):
                    lines.append(f"dcw.{name}.{ticker}={float(values[i])!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, source: str = "<params>") -> ModelParams:
        """Parse text written by to_text.

        Raises:
            ParseError: If a line is malformed or a required key is missing
        """
        entries: dict[str, str] = {}
        for number, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ParseError(source, number, "expected key=value")
            entries[key.strip()] = value.strip()
        try:
            tickers = tuple(t for t in entries["tickers"].split(",") if t)
            strategy = Strategy.from_label(entries["strategy"])
            window = entries["window"]
            m = len(tickers)
            har = None
            if f"alpha0.{tickers[0]}" in entries:
                coeffs = [[float(entries[f"alpha{k}.{t}"]) for k in range(4)] for t in tickers]
                har = HarParams(tickers=tickers, coefficients=coeffs)
            dcc = None
            if "dcc.a" in entries:
                target = np.eye(m)
                for i, j in zip(*np.triu_indices(m, k=1)):
                    target[i, j] = target[j, i] = float(entries[f"dcc.target.{i}.{j}"])
                dcc = DccParams(a=float(entries["dcc.a"]), b=float(entries["dcc.b"]), target=target)
            dcw = None
            if f"dcw.a.{tickers[0]}" in entries:
                fields = {
                    name: [float(entries[f"dcw.{name}.{t}"]) for t in tickers]
                    for name in ("a", "b", "target", "seed")
                }
                dcw = DcwParams(tickers=tickers, **fields)
        except KeyError as e:
            raise ParseError(source, None, f"missing key {e.args[0]!r}") from e
        except IndexError:
            raise ParseError(source, None, "no tickers listed") from None
        except ValueError as e:
            raise ParseError(source, None, str(e)) from e
        return cls(strategy=strategy, window=window, tickers=tickers, har=har, dcc=dcc, dcw=dcw)
