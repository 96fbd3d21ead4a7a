#!/usr/bin/env python3
"""Pytest configuration and fixtures."""

import sys
from datetime import date, timedelta
from pathlib import Path

import numpy as np
import pytest

# Add src to path for imports
src_path = Path(__file__).parent.parent / "src"
if str(src_path) not in sys.path:
    sys.path.insert(0, str(src_path))


@pytest.fixture
def rng():
    """Seeded random generator; every test gets the same stream."""
    return np.random.default_rng(20240501)


def random_pd(rng, m, scale=1.0):
    """Random well-conditioned positive definite matrix."""
    a = rng.standard_normal((m, m))
    return scale * (a @ a.T / m + 0.5 * np.eye(m))


@pytest.fixture
def make_pd(rng):
    """Factory for random positive definite matrices."""

    def factory(m, scale=1.0):
        return random_pd(rng, m, scale)

    return factory


def business_days(start, n):
    """n consecutive weekdays starting at start."""
    days = []
    day = start
    while len(days) < n:
        if day.weekday() < 5:
            days.append(day)
        day += timedelta(days=1)
    return days


@pytest.fixture
def small_spec():
    """Tiny synthetic market: 3 assets, 3 years of days, no noise."""
    from dcw._config import SyntheticMarketSpec

    return SyntheticMarketSpec(
        n_assets=3, n_days=780, intraday_points=40, dcc_a=0.3, dcc_b=0.9,
        mean_correlation=0.3, start_date=date(2010, 1, 4), seed=7,
    )


@pytest.fixture
def cov_series_factory(rng):
    """Factory for CovMatrixSeries of random pd matrices on business days."""
    from dcw._realized import CovarianceMatrix, CovMatrixSeries

    def factory(n_days, tickers=("AAA", "BBB", "CCC"), start=date(2010, 1, 4)):
        m = len(tickers)
        base = random_pd(rng, m)
        matrices = []
        for day in business_days(start, n_days):
            shock = random_pd(rng, m, 0.3)
            matrices.append(CovarianceMatrix.from_values(day, base + shock))
        return CovMatrixSeries(tickers=tuple(tickers), matrices=tuple(matrices))

    return factory
