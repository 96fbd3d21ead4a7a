"""Realized-covariance portfolio toolkit.

Builds daily realized-kernel covariances from tick data, forecasts them (or the
minimum-variance weights they imply directly), allocates under a gross-exposure
bound and evaluates the strategies out of sample.

Quick Start:
    from dcw import get_config_loader, run_backtest

    cfg = get_config_loader().load_backtest_config("backtest.json")
    result = run_backtest(cfg)
    print(result.report.best_ec)

Command line:
    dcw synth --spec spec.json --out data/
    dcw backtest --config data/backtest.json
    dcw report --in data/results
"""

from __future__ import annotations

from dcw._allocation import ActiveSet as ActiveSet
from dcw._allocation import AllocationResult as AllocationResult
from dcw._allocation import constrained_min_variance as constrained_min_variance
from dcw._allocation import min_variance as min_variance
from dcw._allocation import project_weights as project_weights
from dcw._allocation import qp_oracle as qp_oracle
from dcw._backtest import BacktestResult as BacktestResult
from dcw._backtest import Window as Window
from dcw._backtest import rolling_windows as rolling_windows
from dcw._backtest import run_backtest as run_backtest
from dcw._base import DCWBaseModel as DCWBaseModel
from dcw._config import BacktestConfig as BacktestConfig
from dcw._config import CleanConfig as CleanConfig
from dcw._config import EvalConfig as EvalConfig
from dcw._config import ForecastConfig as ForecastConfig
from dcw._config import RealizedConfig as RealizedConfig
from dcw._config import SolverConfig as SolverConfig
from dcw._config import SyntheticMarketSpec as SyntheticMarketSpec
from dcw._config import TradingSession as TradingSession
from dcw._config import get_config_loader as get_config_loader
from dcw._evaluation import BetcVerdict as BetcVerdict
from dcw._evaluation import PerformanceReport as PerformanceReport
from dcw._evaluation import StrategyRun as StrategyRun
from dcw._evaluation import betc as betc
from dcw._evaluation import ceq as ceq
from dcw._evaluation import exact_turnover as exact_turnover
from dcw._evaluation import nceq as nceq
from dcw._evaluation import oos_r2 as oos_r2
from dcw._evaluation import portfolio_variance as portfolio_variance
from dcw._evaluation import sector_importance as sector_importance
from dcw._evaluation import turnover as turnover
from dcw._evaluation import utility_envelope as utility_envelope
from dcw._exceptions import DCWError as DCWError
from dcw._forecast import ModelParams as ModelParams
from dcw._forecast import dcc_fit as dcc_fit
from dcw._forecast import dcw_fit as dcw_fit
from dcw._forecast import har_fit as har_fit
from dcw._labeled_enum import BetcKind as BetcKind
from dcw._labeled_enum import Strategy as Strategy
from dcw._market_data import TickSeries as TickSeries
from dcw._market_data import clean_ticks as clean_ticks
from dcw._market_data import load_ticks as load_ticks
from dcw._market_data import refresh_time_sync as refresh_time_sync
from dcw._realized import CovarianceMatrix as CovarianceMatrix
from dcw._realized import CovMatrixSeries as CovMatrixSeries
from dcw._realized import load_cov_series as load_cov_series
from dcw._realized import realized_kernel as realized_kernel
from dcw._realized import save_cov_series as save_cov_series
from dcw._report import emit_reports as emit_reports
from dcw._synthetic import generate_synthetic as generate_synthetic

__version__ = "0.3.0"
