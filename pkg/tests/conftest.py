from datetime import date

import pytest

from mmspread.config import RunConfig
from mmspread.synthetic import random_walk_bars

HOURLY = 3600


@pytest.fixture
def hourly_config():
    """Small, fast configuration: hourly bars and a five-day window."""
    return RunConfig(interval_seconds=HOURLY, window_days=5, target_monthly_volume=300e9 / 60)


@pytest.fixture
def hourly_bars():
    # 5 warmup + 4 backtest weekdays, 24 bars each
    return random_walk_bars(date(2013, 7, 1), 9, return_std=2e-4 * 60 ** 0.5,
                            interval_seconds=HOURLY, seed=11)
