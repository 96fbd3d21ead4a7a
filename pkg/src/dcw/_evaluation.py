"""Out-of-sample performance measures and strategy comparisons.

Portfolio variances are in daily percent-squared units. Certainty equivalents and
break-even transaction costs are reported in basis points by multiplying by the
configured bp factor (100). Multi-year "All" figures average over days, so years
with more trading days weigh more.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from collections.abc import Iterable, Mapping, Sequence
from datetime import date

import numpy as np
from pydantic import Field, model_validator

from dcw._base import DCWBaseModel, FloatArray, format_bound
from dcw._config import EvalConfig
from dcw._exceptions import DomainError, MetadataError, MisalignedDatesError
from dcw._labeled_enum import BetcKind, Strategy
from dcw._market_data import DailyBarPanel
from dcw._realized import CovMatrixSeries, WeightSeries

logger = logging.getLogger(__name__)

ALL_PERIOD = "All"


class StrategyRun(DCWBaseModel):
    """Out-of-sample weights of one strategy at one exposure bound, with aligned data.

    Attributes:
        strategy: Strategy that produced the weights
        ec: Exposure bound used for allocation
        window: Label of the in-sample / out-of-sample window
        tickers: Asset ordering
        dates: OOS days
        weights: T x M forecast weights
        realized: T x M x M realized covariance matrices of the same days
        open_close: T x M open-to-close returns (fractions), if available
    """

    strategy: Strategy
    ec: float = Field(ge=1.0)
    window: str = ""
    tickers: tuple[str, ...]
    dates: tuple[date, ...]
    weights: FloatArray
    realized: FloatArray
    open_close: FloatArray | None = None

    @model_validator(mode="after")
    def _check_alignment(self) -> StrategyRun:
        t, m = len(self.dates), len(self.tickers)
        if self.weights.shape != (t, m):
            raise ValueError("weights must be T x M")
        if self.realized.shape != (t, m, m):
            raise ValueError("realized matrices must be T x M x M")
        if self.open_close is not None and self.open_close.shape != (t, m):
            raise ValueError("open-close returns must be T x M")
        if t and np.max(np.abs(self.weights.sum(axis=1) - 1.0)) > 1e-9:
            raise ValueError("weights must sum to one every day")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise ValueError("dates must be strictly increasing")
        return self

    @classmethod
    def from_series(
        cls,
        strategy: Strategy,
        ec: float,
        weights: WeightSeries,
        realized: CovMatrixSeries,
        bars: DailyBarPanel | None = None,
        window: str = "",
    ) -> StrategyRun:
        """Align forecast weights with realized matrices and bars on the weight dates.

        Raises:
            MisalignedDatesError: If realized matrices or bars miss a weight date, or
                the asset orderings differ
        """
        if weights.tickers != realized.tickers:
            raise MisalignedDatesError("weights and realized matrices (asset ordering differs)")
        dates = list(weights.dates)
        stack = realized.select(dates).stack()
        open_close = bars.select(dates, weights.tickers) if bars is not None else None
        return cls(
            strategy=strategy, ec=ec, window=window, tickers=weights.tickers,
            dates=tuple(dates), weights=weights.weights, realized=stack, open_close=open_close,
        )

    @property
    def label(self) -> str:
        """Table label such as "DCW 1.50"."""
        return f"{self.strategy.label} {format_bound(self.ec)}"

    def daily_variances(self) -> np.ndarray:
        """w_t' S_t w_t for every day."""
        return np.einsum("ti,tij,tj->t", self.weights, self.realized, self.weights)

    def daily_exposures(self) -> np.ndarray:
        """sum_j |w_jt| for every day."""
        return np.abs(self.weights).sum(axis=1)


class BetcVerdict(DCWBaseModel):
    """Preference region of switching from one strategy to another.

    Attributes:
        kind: Always, Never, PreferredBelow or PreferredAbove
        threshold_bp: Break-even tau/gamma in basis points (for the two conditional kinds)
    """

    kind: BetcKind
    threshold_bp: float | None = None

    @model_validator(mode="after")
    def _check_threshold(self) -> BetcVerdict:
        conditional = self.kind in (BetcKind.PREFERRED_BELOW, BetcKind.PREFERRED_ABOVE)
        if conditional and (self.threshold_bp is None or not self.threshold_bp > 0):
            raise ValueError("conditional verdicts need a positive threshold")
        if not conditional and self.threshold_bp is not None:
            raise ValueError("Always/Never verdicts carry no threshold")
        return self

    @property
    def label(self) -> str:
        """Table encoding: "A", "N", "<2.75" or ">0.71"."""
        if self.threshold_bp is None:
            return self.kind.label
        return f"{self.kind.label}{self.threshold_bp:.2f}"


def day_weighted_mean(values: Sequence[float] | np.ndarray, days: Sequence[int] | np.ndarray) -> float:
    """Average of per-period values weighted by their day counts.

    Raises:
        DomainError: If lengths differ or the total day count is not positive
    """
    v = np.asarray(values, dtype=np.float64)
    d = np.asarray(days, dtype=np.float64)
    if v.shape != d.shape or d.sum() <= 0:
        raise DomainError("values and positive day counts must align")
    return float((v * d).sum() / d.sum())


def portfolio_variance(run: StrategyRun) -> float:
    """Average realized portfolio variance T^-1 sum_t w_t' S_t w_t.

    Raises:
        DomainError: If the run has no days
    """
    if not run.dates:
        raise DomainError(f"{run.label}: empty run")
    return float(run.daily_variances().mean())


def ceq(pv1: float, pv2: float, cfg: EvalConfig | None = None) -> float:
    """Certainty-equivalent gain in bp of switching from PV1 to PV2: factor * gamma * (PV1 - PV2) / 2."""
    cfg = cfg or EvalConfig()
    return cfg.bp_factor * cfg.gamma * 0.5 * (pv1 - pv2)


def turnover(run: StrategyRun) -> float:
    """Average gross exposure T^-1 sum_t sum_j |w_jt|."""
    if not run.dates:
        raise DomainError(f"{run.label}: empty run")
    return float(run.daily_exposures().mean())


def exact_turnover(run: StrategyRun) -> float:
    """Day-trader round-trip turnover T^-1 sum_t sum_j (2 + r_oc_jt) |w_jt| / 2.

    Raises:
        MisalignedDatesError: If the run carries no open-close returns
    """
    if run.open_close is None:
        raise MisalignedDatesError(f"open-close returns for {run.label}")
    if not run.dates:
        raise DomainError(f"{run.label}: empty run")
    gross = (2.0 + run.open_close) * np.abs(run.weights)
    return float(gross.sum(axis=1).mean() / 2.0)


def weighted_average_return(run: StrategyRun) -> float:
    """|w|-weighted average open-close return over all days and assets (fraction).

    Raises:
        MisalignedDatesError: If the run carries no open-close returns
    """
    if run.open_close is None:
        raise MisalignedDatesError(f"open-close returns for {run.label}")
    absolute = np.abs(run.weights)
    return float((absolute * run.open_close).sum() / absolute.sum())


class TurnoverError(DCWBaseModel):
    """Relative error of TO against the exact turnover and its closed-form approximation.

    Attributes:
        actual: (TO - TO_exact) / TO_exact
        approximation: -p / (500 + p) with p = 250 * weighted average return
        annual_return: p
    """

    actual: float
    approximation: float
    annual_return: float


def turnover_error(run: StrategyRun) -> TurnoverError:
    """Compare TO with the exact turnover of the run."""
    exact = exact_turnover(run)
    p = 250.0 * weighted_average_return(run)
    return TurnoverError(
        actual=(turnover(run) - exact) / exact,
        approximation=-p / (500.0 + p),
        annual_return=p,
    )


def transaction_costs(to: float, cfg: EvalConfig | None = None) -> float:
    """Average daily cost 2 * tau * TO in bp."""
    cfg = cfg or EvalConfig()
    return 2.0 * cfg.tau_bp * to


def nceq(pv1: float, pv2: float, to1: float, to2: float, cfg: EvalConfig | None = None) -> float:
    """Net certainty equivalent in bp: ceq(PV1, PV2) + 2 * tau * (TO1 - TO2)."""
    cfg = cfg or EvalConfig()
    return ceq(pv1, pv2, cfg) + 2.0 * cfg.tau_bp * (to1 - to2)


def betc(pv1: float, pv2: float, to1: float, to2: float, bp_factor: float = 100.0) -> BetcVerdict:
    """Break-even verdict for switching from strategy 1 to strategy 2.

    With dPV = PV1 - PV2 and dTO = TO1 - TO2 the break-even level is
    tau*/gamma = -(bp_factor / 4) * dPV / dTO:
    - dPV >= 0 and dTO >= 0, not both zero: Always
    - dPV <= 0 and dTO <= 0: Never (including no difference at all)
    - dPV > 0 and dTO < 0: preferred below tau*/gamma
    - dPV < 0 and dTO > 0: preferred above tau*/gamma
    """
    d_pv, d_to = pv1 - pv2, to1 - to2
    if d_pv >= 0 and d_to >= 0 and (d_pv > 0 or d_to > 0):
        return BetcVerdict(kind=BetcKind.ALWAYS)
    if d_pv <= 0 and d_to <= 0:
        return BetcVerdict(kind=BetcKind.NEVER)
    threshold = -(bp_factor / 4.0) * d_pv / d_to
    kind = BetcKind.PREFERRED_BELOW if d_pv > 0 else BetcKind.PREFERRED_ABOVE
    return BetcVerdict(kind=kind, threshold_bp=threshold)


def pv_improvement(pv_base: float, pv_new: float) -> float:
    """Percentage reduction of portfolio variance relative to the base."""
    if pv_base == 0:
        raise DomainError("base portfolio variance is zero")
    return 100.0 * (pv_base - pv_new) / pv_base


def _r_squared(predicted: np.ndarray, realized: np.ndarray, labels: Sequence[str]) -> np.ndarray:
    p = np.asarray(predicted, dtype=np.float64)
    r = np.asarray(realized, dtype=np.float64)
    if p.shape != r.shape or p.ndim != 2 or p.shape[0] == 0:
        raise MisalignedDatesError("forecast and realized weights")
    mse_model = ((r - p) ** 2).sum(axis=0)
    mse_naive = ((r - r.mean(axis=0)) ** 2).sum(axis=0)
    result = np.full(r.shape[1], np.nan)
    defined = mse_naive > 0
    result[defined] = 1.0 - mse_model[defined] / mse_naive[defined]
    for i in np.flatnonzero(~defined):
        logger.warning("R-squared undefined for %s: realized weights are constant", labels[i])
    return result


def oos_r2(
    forecasts: np.ndarray, realized: np.ndarray, tickers: Sequence[str] | None = None
) -> np.ndarray:
    """Out-of-sample R^2 per asset against the ex-post mean of the realized weights.

    Assets whose realized weights do not vary get NaN.

    Raises:
        MisalignedDatesError: If the two series do not have the same shape
    """
    labels = list(tickers) if tickers is not None else [str(i) for i in range(np.shape(realized)[1])]
    return _r_squared(forecasts, realized, labels)


def is_r2(
    fitted: np.ndarray, realized: np.ndarray, tickers: Sequence[str] | None = None
) -> np.ndarray:
    """In-sample R^2 per asset of fitted weights."""
    labels = list(tickers) if tickers is not None else [str(i) for i in range(np.shape(realized)[1])]
    return _r_squared(fitted, realized, labels)


def r2_histogram(values: Sequence[float] | np.ndarray, bins: int = 20) -> tuple[np.ndarray, np.ndarray]:
    """Density histogram of finite R^2 values: (bin edges, densities)."""
    arr = np.asarray(values, dtype=np.float64)
    arr = arr[np.isfinite(arr)]
    if arr.size == 0:
        return np.linspace(0.0, 1.0, bins + 1), np.zeros(bins)
    densities, edges = np.histogram(arr, bins=bins, density=True)
    return edges, densities


class UtilityLine(DCWBaseModel):
    """Utility of one exposure variant as a function of x = tau/gamma in bp."""

    ec: float
    pv: float
    to: float

    def value(self, x: float | np.ndarray, bp_factor: float = 100.0) -> float | np.ndarray:
        """-2 x TO - (bp_factor / 2) PV."""
        return -2.0 * np.asarray(x) * self.to - 0.5 * bp_factor * self.pv


class Breakpoint(DCWBaseModel):
    """Cost level at which the best exposure variant changes."""

    tau_bp: float
    from_ec: float
    to_ec: float


class UtilityEnvelope(DCWBaseModel):
    """Upper envelope over exposure variants of one strategy's utility lines."""

    strategy: Strategy
    lines: tuple[UtilityLine, ...]
    breakpoints: tuple[Breakpoint, ...]
    grid: FloatArray
    values: FloatArray
    argmax_ec: FloatArray


def tau_grid(cfg: EvalConfig | None = None) -> np.ndarray:
    """Cost grid 0, step, ..., tau_max (bp)."""
    cfg = cfg or EvalConfig()
    n = int(round(cfg.tau_max_bp / cfg.tau_step_bp))
    return np.linspace(0.0, n * cfg.tau_step_bp, n + 1)


def utility_envelope(
    strategy: Strategy,
    lines: Sequence[UtilityLine],
    cfg: EvalConfig | None = None,
    grid: np.ndarray | None = None,
) -> UtilityEnvelope:
    """Best attainable utility over exposure variants for each cost level.

    Breakpoints are found exactly by walking from the lowest-PV line at zero cost to
    the first line with lower turnover that overtakes it, and so on.

    Raises:
        DomainError: If no line is given
    """
    cfg = cfg or EvalConfig()
    if not lines:
        raise DomainError(f"no exposure variants for {strategy.label}")
    grid = tau_grid(cfg) if grid is None else np.asarray(grid, dtype=np.float64)
    half = 0.5 * cfg.bp_factor

    current = min(lines, key=lambda ln: (ln.pv, ln.to, ln.ec))
    x = 0.0
    breakpoints = []
    while True:
        candidates = []
        for other in lines:
            if other.to < current.to and other.pv > current.pv:
                crossing = half * (other.pv - current.pv) / (2.0 * (current.to - other.to))
                if crossing > x:
                    candidates.append((crossing, other.to, other.ec, other))
        if not candidates:
            break
        crossing, _, _, nxt = min(candidates, key=lambda c: (c[0], c[1], c[2]))
        breakpoints.append(Breakpoint(tau_bp=crossing, from_ec=current.ec, to_ec=nxt.ec))
        current, x = nxt, crossing

    values = np.stack([np.asarray(ln.value(grid, cfg.bp_factor)) for ln in lines])
    best = values.max(axis=0)
    ecs = np.array([ln.ec for ln in lines])
    tos = np.array([ln.to for ln in lines])
    argmax = np.empty(len(grid))
    for k in range(len(grid)):
        winners = np.flatnonzero(values[:, k] >= best[k] - 1e-12 * max(1.0, abs(best[k])))
        argmax[k] = ecs[winners[np.argmin(tos[winners])]]
    return UtilityEnvelope(
        strategy=strategy, lines=tuple(lines), breakpoints=tuple(breakpoints),
        grid=grid, values=best, argmax_ec=argmax,
    )


def envelope_difference(envelope: UtilityEnvelope, baseline: UtilityEnvelope) -> np.ndarray:
    """Envelope minus the baseline envelope on their shared cost grid.

    Raises:
        DomainError: If the grids differ
    """
    if envelope.grid.shape != baseline.grid.shape or not np.allclose(envelope.grid, baseline.grid):
        raise DomainError("envelopes are defined on different cost grids")
    return np.asarray(envelope.values - baseline.values)


class SectorShares(DCWBaseModel):
    """Daily shares of absolute weight by sector, sectors ordered by average share."""

    strategy: Strategy
    ec: float
    dates: tuple[date, ...]
    sectors: tuple[str, ...]
    shares: FloatArray

    def cumulative(self) -> np.ndarray:
        """Stacked shares for area plots (last column is 1)."""
        return np.cumsum(self.shares, axis=1)


def sector_importance(
    weights: np.ndarray,
    tickers: Sequence[str],
    sectors: Mapping[str, str],
    dates: Sequence[date],
    strategy: Strategy = Strategy.DCW,
    ec: float = math.inf,
) -> SectorShares:
    """Aggregate |w| rescaled to one into sector shares per day.

    Raises:
        MetadataError: If a ticker has no sector
    """
    for ticker in tickers:
        if ticker not in sectors:
            raise MetadataError(ticker, sorted(sectors))
    w = np.abs(np.asarray(weights, dtype=np.float64))
    w = w / w.sum(axis=1, keepdims=True)
    names = sorted({sectors[t] for t in tickers})
    membership = np.array([[sectors[t] == s for s in names] for t in tickers], dtype=np.float64)
    shares = w @ membership
    order = sorted(range(len(names)), key=lambda k: (-shares[:, k].mean(), names[k]))
    return SectorShares(
        strategy=strategy, ec=ec, dates=tuple(dates),
        sectors=tuple(names[k] for k in order), shares=shares[:, order],
    )


class PeriodMetrics(DCWBaseModel):
    """Scalar measures of one strategy and exposure bound over one period.

    Attributes:
        period: Year ("2010"), "All", or "All ex-2008"
        days: Number of OOS days in the period
        pv: Average portfolio variance
        to: Turnover
        to_exact: Exact turnover (None without bar data)
        avg_return: |w|-weighted average open-close return (None without bar data)
    """

    strategy: Strategy
    ec: float
    period: str
    days: int
    pv: float
    to: float
    to_exact: float | None = None
    avg_return: float | None = None


class SwitchMetrics(DCWBaseModel):
    """CEQ, NCEQ and BETC of switching from one strategy to another over one period."""

    source: Strategy
    target: Strategy
    ec: float
    period: str
    ceq_bp: float
    nceq_bp: float
    betc: BetcVerdict


class R2Record(DCWBaseModel):
    """R^2 of one asset's weight forecasts in one window (NaN when undefined)."""

    strategy: Strategy
    ec: float
    window: str
    ticker: str
    kind: str
    value: float


def period_metrics(runs: Iterable[StrategyRun], exclude_years: Sequence[int] = ()) -> list[PeriodMetrics]:
    """Per-year, "All" and optional "All ex-..." metrics of runs sharing strategy and EC.

    Raises:
        DomainError: If the runs are empty or mix strategies or exposure bounds
    """
    runs = list(runs)
    if not runs:
        raise DomainError("no runs to aggregate")
    keys = {(r.strategy, r.ec) for r in runs}
    if len(keys) != 1:
        raise DomainError("runs mix strategies or exposure bounds")
    strategy, ec = keys.pop()

    years = np.concatenate([[d.year for d in r.dates] for r in runs])
    pv = np.concatenate([r.daily_variances() for r in runs])
    exposure = np.concatenate([r.daily_exposures() for r in runs])
    gross = np.concatenate([np.abs(r.weights) for r in runs])
    oc: np.ndarray | None = None
    if all(r.open_close is not None for r in runs):
        oc = np.concatenate([r.open_close for r in runs if r.open_close is not None])

    def metrics(period: str, mask: np.ndarray) -> PeriodMetrics:
        to_exact = avg_return = None
        if oc is not None:
            to_exact = float((((2.0 + oc[mask]) * gross[mask]).sum(axis=1) / 2.0).mean())
            avg_return = float((gross[mask] * oc[mask]).sum() / gross[mask].sum())
        return PeriodMetrics(
            strategy=strategy, ec=ec, period=period, days=int(mask.sum()),
            pv=float(pv[mask].mean()), to=float(exposure[mask].mean()),
            to_exact=to_exact, avg_return=avg_return,
        )

    result = [metrics(str(y), years == y) for y in sorted(set(years.tolist()))]
    result.append(metrics(ALL_PERIOD, np.ones(len(years), dtype=bool)))
    excluded = [y for y in exclude_years if y in set(years.tolist())]
    if excluded:
        keep = ~np.isin(years, excluded)
        if keep.any():
            label = f"{ALL_PERIOD} ex-{'-'.join(str(y) for y in sorted(excluded))}"
            result.append(metrics(label, keep))
    return result


def switch_metrics(
    source: Sequence[PeriodMetrics], target: Sequence[PeriodMetrics], ec: float, cfg: EvalConfig
) -> list[SwitchMetrics]:
    """CEQ, NCEQ and BETC for every period present in both metric lists."""
    by_period = {m.period: m for m in target}
    result = []
    for m1 in source:
        m2 = by_period.get(m1.period)
        if m2 is None:
            continue
        result.append(
            SwitchMetrics(
                source=m1.strategy, target=m2.strategy, ec=ec, period=m1.period,
                ceq_bp=ceq(m1.pv, m2.pv, cfg),
                nceq_bp=nceq(m1.pv, m2.pv, m1.to, m2.to, cfg),
                betc=betc(m1.pv, m2.pv, m1.to, m2.to, cfg.bp_factor),
            )
        )
    return result


def best_ec(metrics: Iterable[PeriodMetrics], period: str = ALL_PERIOD) -> dict[Strategy, float]:
    """Ex-post PV-minimizing exposure bound of each strategy (ties go to the tighter bound)."""
    best: dict[Strategy, tuple[float, float]] = {}
    for m in metrics:
        if m.period != period:
            continue
        key = (m.pv, m.ec)
        if m.strategy not in best or key < best[m.strategy]:
            best[m.strategy] = key
    return {s: ec for s, (_, ec) in best.items()}


class DcwWindowSummary(DCWBaseModel):
    """Cross-sectional summary of fitted DCW parameters in one window."""

    window: str
    parameter: str
    mean: float
    std: float
    min: float
    p05: float
    median: float
    p95: float
    max: float


class PerformanceReport(DCWBaseModel):
    """Everything a backtest reports, ready for table emission."""

    tickers: tuple[str, ...]
    periods: tuple[str, ...]
    metrics: tuple[PeriodMetrics, ...]
    switches: tuple[SwitchMetrics, ...] = ()
    best_ec: dict[str, float] = Field(default_factory=dict)
    r2: tuple[R2Record, ...] = ()
    envelopes: tuple[UtilityEnvelope, ...] = ()
    sector_shares: tuple[SectorShares, ...] = ()
    dcw_summaries: tuple[DcwWindowSummary, ...] = ()
    repaired_days: int = 0
    floored_forecasts: int = 0


def build_report(
    runs: Sequence[StrategyRun],
    cfg: EvalConfig,
    r2_records: Sequence[R2Record] = (),
    sectors: Mapping[str, str] | None = None,
    dcw_summaries: Sequence[DcwWindowSummary] = (),
    repaired_days: int = 0,
    floored_forecasts: int = 0,
) -> PerformanceReport:
    """Aggregate strategy runs into a PerformanceReport.

    Strategies evaluated without an exposure grid (Naive, VT) are compared with
    every exposure variant of the strategy they are switched with.

    Raises:
        DomainError: If runs is empty
    """
    if not runs:
        raise DomainError("no strategy runs to report")
    grouped: dict[tuple[Strategy, float], list[StrategyRun]] = defaultdict(list)
    for run in runs:
        grouped[(run.strategy, run.ec)].append(run)
    ordered_keys = sorted(grouped, key=lambda k: (int(k[0]), k[1]))

    metrics: dict[tuple[Strategy, float], list[PeriodMetrics]] = {
        key: period_metrics(grouped[key], cfg.exclude_years) for key in ordered_keys
    }
    all_metrics = [m for key in ordered_keys for m in metrics[key]]
    periods = tuple(dict.fromkeys(m.period for m in sorted(all_metrics, key=_period_order)))

    def variants(strategy: Strategy) -> dict[float, list[PeriodMetrics]]:
        return {ec: metrics[(s, ec)] for s, ec in ordered_keys if s == strategy}

    switches: list[SwitchMetrics] = []
    for source, target in cfg.switches:
        src, tgt = variants(source), variants(target)
        if not src or not tgt:
            continue
        if source.uses_exposure_grid and target.uses_exposure_grid:
            ecs = sorted(set(src) & set(tgt))
        elif source.uses_exposure_grid:
            ecs = sorted(src)
        elif target.uses_exposure_grid:
            ecs = sorted(tgt)
        else:
            ecs = [min(tgt)]
        for ec in ecs:
            m1 = src.get(ec) if source.uses_exposure_grid else src[min(src)]
            m2 = tgt.get(ec) if target.uses_exposure_grid else tgt[min(tgt)]
            if m1 is None or m2 is None:
                continue
            switches.extend(switch_metrics(m1, m2, ec, cfg))

    envelopes = []
    for strategy in dict.fromkeys(s for s, _ in ordered_keys):
        lines = [
            UtilityLine(ec=ec, pv=m.pv, to=m.to)
            for ec, ms in variants(strategy).items()
            for m in ms
            if m.period == ALL_PERIOD
        ]
        envelopes.append(utility_envelope(strategy, lines, cfg))

    shares = []
    if sectors:
        for key in ordered_keys:
            key_runs = sorted(grouped[key], key=lambda r: r.dates[0] if r.dates else date.min)
            w = np.concatenate([r.weights for r in key_runs])
            dates = [d for r in key_runs for d in r.dates]
            shares.append(sector_importance(w, key_runs[0].tickers, sectors, dates, key[0], key[1]))

    best = {s.label: ec for s, ec in best_ec(all_metrics).items() if s.uses_exposure_grid}
    return PerformanceReport(
        tickers=runs[0].tickers,
        periods=periods,
        metrics=tuple(all_metrics),
        switches=tuple(switches),
        best_ec=best,
        r2=tuple(r2_records),
        envelopes=tuple(envelopes),
        sector_shares=tuple(shares),
        dcw_summaries=tuple(dcw_summaries),
        repaired_days=repaired_days,
        floored_forecasts=floored_forecasts,
    )


def _period_order(m: PeriodMetrics) -> tuple[int, str]:
    if m.period.isdigit():
        return (0, m.period)
    return (1 if m.period == ALL_PERIOD else 2, m.period)
