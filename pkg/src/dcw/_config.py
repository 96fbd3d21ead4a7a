"""Configuration models and the JSON configuration loader."""

from __future__ import annotations

import hashlib
import json
import math
from datetime import date, time
from pathlib import Path
from typing import Any, Literal, TypeVar

import pandas as pd
from pydantic import (
    BaseModel,
    Field,
    ValidationError,
    field_serializer,
    field_validator,
    model_validator,
)

from dcw._base import DCWBaseModel, parse_bound
from dcw._exceptions import ConfigError
from dcw._labeled_enum import Strategy

ModelT = TypeVar("ModelT", bound=BaseModel)

DEFAULT_EC_GRID: tuple[float, ...] = (1.00, 1.25, 1.50, 1.75, 2.00, math.inf)

DEFAULT_SWITCHES: tuple[tuple[Strategy, Strategy], ...] = (
    (Strategy.NAIVE, Strategy.VT),
    (Strategy.VT, Strategy.RW),
    (Strategy.RW, Strategy.DCC),
    (Strategy.DCC, Strategy.DCW),
)


def _check_timezone(value: str) -> str:
    try:
        pd.Timestamp("2000-01-03").tz_localize(value)
    except Exception as e:
        raise ValueError(f"unknown timezone {value!r}") from e
    return value


class TradingSession(DCWBaseModel):
    """Regular trading hours in local exchange time."""

    start: time = time(9, 30)
    end: time = time(16, 0)
    timezone: str = "America/New_York"

    @field_validator("timezone")
    @classmethod
    def _valid_timezone(cls, value: str) -> str:
        return _check_timezone(value)

    @model_validator(mode="after")
    def _ordered(self) -> TradingSession:
        if self.end <= self.start:
            raise ValueError("session end must be after session start")
        return self

    def bounds(self, day: date) -> tuple[pd.Timestamp, pd.Timestamp]:
        """Session open and close of a trading day as tz-aware UTC timestamps."""
        start = pd.Timestamp.combine(day, self.start).tz_localize(self.timezone)
        end = pd.Timestamp.combine(day, self.end).tz_localize(self.timezone)
        return start.tz_convert("UTC"), end.tz_convert("UTC")

    @property
    def length_seconds(self) -> float:
        """Session length in seconds."""
        start = self.start.hour * 3600 + self.start.minute * 60 + self.start.second
        end = self.end.hour * 3600 + self.end.minute * 60 + self.end.second
        return float(end - start)


class CleanConfig(DCWBaseModel):
    """Tick cleaning and session filtering settings.

    Attributes:
        mad_k: Outlier threshold in median absolute deviations
        mad_window: Neighbourhood (ticks, half before and half after a trade) for the median and the MAD
        mad_floor: Relative floor on the MAD (fraction of the neighbourhood median price)
        session_start: Session open, local exchange time
        session_end: Session close, local exchange time
        timezone: Exchange timezone
    """

    mad_k: float = Field(default=10.0, gt=0)
    mad_window: int = Field(default=50, ge=3)
    mad_floor: float = Field(default=1e-4, ge=0)
    session_start: time = time(9, 30)
    session_end: time = time(16, 0)
    timezone: str = "America/New_York"

    @field_validator("timezone")
    @classmethod
    def _valid_timezone(cls, value: str) -> str:
        return _check_timezone(value)

    @property
    def session(self) -> TradingSession:
        """The trading session described by this config."""
        return TradingSession(start=self.session_start, end=self.session_end, timezone=self.timezone)


class RealizedConfig(DCWBaseModel):
    """Realized-measure settings."""

    bin_minutes: int = Field(default=15, gt=0)
    percent_scale: float = Field(default=100.0, gt=0)
    ridge: float = Field(default=1e-8, gt=0)


class SolverConfig(DCWBaseModel):
    """Exposure-constrained active-set solver settings."""

    constraint_tol: float = Field(default=1e-9, gt=0)
    kkt_tol: float = Field(default=1e-8, gt=0)
    max_iter: int = Field(default=500, ge=1)
    regularization: float = Field(default=1e-10, ge=0)
    warm_start: bool = True
    fallback_long_only: bool = False


class ForecastConfig(DCWBaseModel):
    """Model fitting and forecasting settings.

    Attributes:
        har_floor: Floor applied to negative HAR variance forecasts
        dcw_feedback: Whether the raw or the normalized lagged forecast feeds the DCW recursion
        grid_points: Points per axis of the coarse grid preceding simplex refinement
        min_fit_days: Minimum in-sample length for DCC and DCW fits
    """

    har_floor: float = Field(default=1e-8, gt=0)
    dcw_feedback: Literal["raw", "normalized"] = "raw"
    grid_points: int = Field(default=21, ge=3)
    min_fit_days: int = Field(default=100, ge=33)


def _parse_strategy(value: Any) -> Any:
    if isinstance(value, str):
        return Strategy.from_label(value)
    return value


class EvalConfig(DCWBaseModel):
    """Evaluation settings.

    Attributes:
        gamma: Risk aversion
        tau_bp: Proportional transaction cost in basis points
        bp_factor: Conversion from daily percent-squared units to basis points
        tau_max_bp: Upper end of the utility-envelope cost grid (basis points)
        tau_step_bp: Step of the utility-envelope cost grid (basis points)
        exclude_years: Years dropped from the robustness aggregate column
        switches: Strategy switches (from, to) reported in CEQ and BETC tables
        r2_bins: Histogram bins for the OOS R-squared density data
    """

    gamma: float = Field(default=1.0, gt=0)
    tau_bp: float = Field(default=0.0, ge=0)
    bp_factor: float = Field(default=100.0, gt=0)
    tau_max_bp: float = Field(default=25.0, gt=0)
    tau_step_bp: float = Field(default=0.25, gt=0)
    exclude_years: tuple[int, ...] = ()
    switches: tuple[tuple[Strategy, Strategy], ...] = DEFAULT_SWITCHES
    r2_bins: int = Field(default=20, ge=1)

    @field_validator("switches", mode="before")
    @classmethod
    def _parse_switches(cls, value: Any) -> Any:
        if isinstance(value, (list, tuple)):
            return tuple(tuple(_parse_strategy(s) for s in pair) for pair in value)
        return value

    @field_serializer("switches")
    def _dump_switches(self, value: tuple[tuple[Strategy, Strategy], ...]) -> list[list[str]]:
        return [[a.label, b.label] for a, b in value]


class BacktestConfig(DCWBaseModel):
    """Full description of a rolling in-sample / out-of-sample backtest."""

    ticks_path: Path | None = None
    cov_path: Path | None = None
    bars_path: Path | None = None
    meta_path: Path | None = None
    assets: tuple[str, ...] = Field(min_length=1)
    sectors: dict[str, str] = Field(default_factory=dict)
    is_years: int = Field(default=5, ge=1)
    oos_years: int = Field(default=1, ge=1)
    strategies: tuple[Strategy, ...] = tuple(Strategy)
    ec_grid: tuple[float, ...] = DEFAULT_EC_GRID
    eval: EvalConfig = Field(default_factory=EvalConfig)
    clean: CleanConfig = Field(default_factory=CleanConfig)
    realized: RealizedConfig = Field(default_factory=RealizedConfig)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    forecast: ForecastConfig = Field(default_factory=ForecastConfig)
    output_dir: Path = Path("out")
    seed: int = 0
    threads: int = Field(default=1, ge=1)

    @field_validator("assets")
    @classmethod
    def _unique_assets(cls, value: tuple[str, ...]) -> tuple[str, ...]:
        if len(set(value)) != len(value):
            raise ValueError("asset tickers must be unique")
        return value

    @field_validator("strategies", mode="before")
    @classmethod
    def _parse_strategies(cls, value: Any) -> Any:
        if isinstance(value, (list, tuple)):
            return tuple(_parse_strategy(s) for s in value)
        return value

    @field_validator("strategies")
    @classmethod
    def _nonempty_strategies(cls, value: tuple[Strategy, ...]) -> tuple[Strategy, ...]:
        if not value:
            raise ValueError("at least one strategy is required")
        return tuple(dict.fromkeys(value))

    @field_validator("ec_grid", mode="before")
    @classmethod
    def _parse_ec_grid(cls, value: Any) -> Any:
        if isinstance(value, (list, tuple)):
            return tuple(parse_bound(v) for v in value)
        return value

    @field_validator("ec_grid")
    @classmethod
    def _valid_ec_grid(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if not value:
            raise ValueError("exposure-constraint grid must not be empty")
        for ec in value:
            if ec < 1.0:
                raise ValueError(f"exposure constraint {ec} < 1 is infeasible with unit budget")
        return tuple(sorted(set(value)))

    @field_serializer("ec_grid")
    def _dump_ec_grid(self, value: tuple[float, ...]) -> list[float | str]:
        return ["inf" if math.isinf(v) else v for v in value]

    @field_serializer("strategies")
    def _dump_strategies(self, value: tuple[Strategy, ...]) -> list[str]:
        return [s.label for s in value]

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON dump of this config."""
        payload = json.dumps(self.model_dump(mode="json"), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class SyntheticMarketSpec(DCWBaseModel):
    """Parameters of the synthetic tick-data generator.

    The latent daily covariance is D R_t D with constant daily volatilities D and
    correlations following a scalar DCC-type recursion targeted at an
    equicorrelation matrix.

    Attributes:
        n_assets: Number of assets M
        n_days: Number of trading days T
        intraday_points: Trading instants per day
        dcc_a: Loading on the lagged realized correlation (enters squared)
        dcc_b: Loading on the lagged latent correlation (enters squared)
        mean_correlation: Off-diagonal entry of the correlation target
        vols: Daily volatilities in percent (default: evenly spread 0.8..2.5)
        noise_scale: Standard deviation of additive log-price microstructure noise
        trade_probability: Chance that an asset trades at a given instant
        start_date: First business day
        seed: Random seed
    """

    n_assets: int = Field(default=5, ge=1)
    n_days: int = Field(default=2016, ge=2)
    intraday_points: int = Field(default=78, ge=2)
    dcc_a: float = Field(default=0.3, ge=0)
    dcc_b: float = Field(default=0.9, ge=0)
    mean_correlation: float = 0.3
    vols: tuple[float, ...] | None = None
    noise_scale: float = Field(default=0.0, ge=0)
    trade_probability: float = Field(default=1.0, gt=0, le=1)
    start_date: date = date(2008, 1, 2)
    session: TradingSession = Field(default_factory=TradingSession)
    seed: int = 0

    @model_validator(mode="after")
    def _stationary(self) -> SyntheticMarketSpec:
        if self.dcc_a**2 + self.dcc_b**2 >= 1.0:
            raise ValueError(
                f"non-stationary correlation process: a^2 + b^2 = "
                f"{self.dcc_a**2 + self.dcc_b**2:.4f} >= 1"
            )
        lower = -1.0 / (self.n_assets - 1) if self.n_assets > 1 else -1.0
        if not lower < self.mean_correlation < 1.0:
            raise ValueError(f"mean_correlation must lie in ({lower:.4f}, 1)")
        if self.vols is not None:
            if len(self.vols) != self.n_assets:
                raise ValueError("vols must have one entry per asset")
            if min(self.vols) <= 0:
                raise ValueError("vols must be positive")
        return self

    @property
    def tickers(self) -> tuple[str, ...]:
        """Synthetic ticker symbols."""
        return tuple(f"S{i + 1:02d}" for i in range(self.n_assets))


class ConfigLoader:
    """Load and cache JSON configuration files.

    Files are parsed on demand and cached by resolved path. Relative data paths
    inside a backtest config are resolved against the config file's directory.
    """

    def __init__(self) -> None:
        self._cache: dict[tuple[Path, str], BaseModel] = {}

    def load_backtest_config(self, path: Path | str) -> BacktestConfig:
        """Load a BacktestConfig from a JSON file.

        Raises:
            ConfigError: If the file is unreadable, not JSON, or fails validation
        """
        resolved = Path(path).resolve()
        data = self._read_json(resolved)
        for key in ("ticks_path", "cov_path", "bars_path", "meta_path", "output_dir"):
            value = data.get(key)
            if isinstance(value, str) and not Path(value).is_absolute():
                data[key] = str(resolved.parent / value)
        return self._validate(BacktestConfig, data, resolved)

    def load_synthetic_spec(self, path: Path | str) -> SyntheticMarketSpec:
        """Load a SyntheticMarketSpec from a JSON file.

        Raises:
            ConfigError: If the file is unreadable, not JSON, or fails validation
        """
        resolved = Path(path).resolve()
        return self._validate(SyntheticMarketSpec, self._read_json(resolved), resolved)

    def _read_json(self, path: Path) -> dict[str, Any]:
        try:
            with open(path, encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON in {path}: {e}") from e
        except OSError as e:
            raise ConfigError(f"cannot read {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"{path} must contain a JSON object")
        return data

    def _validate(self, model: type[ModelT], data: dict[str, Any], path: Path) -> ModelT:
        key = (path, model.__name__)
        cached = self._cache.get(key)
        if isinstance(cached, model):
            return cached
        try:
            result = model.model_validate(data)
        except ValidationError as e:
            first = e.errors()[0]
            field = ".".join(str(p) for p in first["loc"]) or None
            raise ConfigError(f"{first['msg']} ({e.error_count()} error(s) in {path})", field) from e
        self._cache[key] = result
        return result

    def clear_cache(self) -> None:
        """Clear the configuration cache."""
        self._cache.clear()


# Global configuration loader instance
_global_loader: ConfigLoader | None = None


def get_config_loader() -> ConfigLoader:
    """Get the global configuration loader instance."""
    global _global_loader
    if _global_loader is None:
        _global_loader = ConfigLoader()
    return _global_loader
