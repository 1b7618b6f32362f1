"""Seeded geometric-random-walk minute bars for demos and tests."""

from __future__ import annotations

from datetime import date, timedelta

import numpy as np

from .market_data import SECONDS_PER_DAY, BarSeries, exp_array

_EPOCH = date(1970, 1, 1)


def trading_days(start: date, count: int, weekdays_only: bool = True) -> list[date]:
    days, d = [], start
    while len(days) < count:
        if not weekdays_only or d.weekday() < 5:
            days.append(d)
        d += timedelta(days=1)
    return days


def random_walk_bars(start: date, n_days: int, return_std: float = 2e-4,
                     start_rate: float = 1.32, seed: int = 7,
                     interval_seconds: int = 60, weekdays_only: bool = True) -> BarSeries:
    """Minute bars whose closes follow a driftless geometric random walk.

    Each bar opens at the previous close; high and low extend beyond the
    open/close range by a half-normal wick. Prices are rounded to 6 decimals
    so the series survives a CSV round trip unchanged.
    """
    per_day = SECONDS_PER_DAY // interval_seconds
    days = trading_days(start, n_days, weekdays_only)
    offsets = np.arange(per_day, dtype=np.int64) * interval_seconds
    ts = np.concatenate([(d - _EPOCH).days * SECONDS_PER_DAY + offsets for d in days])

    rng = np.random.Generator(np.random.Philox(seed))
    z = rng.standard_normal((ts.size, 3))
    log_path = np.log(start_rate) + np.cumsum(return_std * z[:, 0])
    close = exp_array(log_path)
    open_ = np.concatenate([[start_rate], close[:-1]])
    wick = 0.5 * return_std
    high = np.maximum(open_, close) * exp_array(wick * np.abs(z[:, 1]))
    low = np.minimum(open_, close) * exp_array(-wick * np.abs(z[:, 2]))
    r = lambda a: np.round(a, 6)  # noqa: E731
    return BarSeries(ts, r(open_), r(high), r(low), r(close))


def flat_bars(start: date, n_days: int, rate: float = 1.3, interval_seconds: int = 60) -> BarSeries:
    per_day = SECONDS_PER_DAY // interval_seconds
    days = trading_days(start, n_days)
    offsets = np.arange(per_day, dtype=np.int64) * interval_seconds
    ts = np.concatenate([(d - _EPOCH).days * SECONDS_PER_DAY + offsets for d in days])
    px = np.full(ts.size, rate)
    return BarSeries(ts, px, px, px, px)
