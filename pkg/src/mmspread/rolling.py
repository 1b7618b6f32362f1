"""Trailing windows of daily aggregates, refreshed once per trading day.

Window statistics are recomputed from the retained aggregates with
``math.fsum`` on every query. Nothing is ever subtracted on eviction, so
rounding error stays bounded by the window size, not the backtest length.
"""

from __future__ import annotations

import math
from collections import deque
from collections.abc import Iterable
from dataclasses import dataclass, field
from datetime import date

from .errors import EmptyWindow, InsufficientData, OutOfOrderDay


@dataclass(frozen=True)
class DailyAggregate:
    """One trading day's contribution to every rolling window.

    ``trading_minutes`` covers every observed interval and is the denominator
    for the trade and volume rates; ``interval_count`` covers only intervals
    that produced a price/spread factor (the first bar of a series has none).
    """

    day: date
    total_trades: int = 0
    total_volume: float = 0.0
    trading_minutes: float = 0.0
    sum_price_factor: float = 0.0
    sum_spread_factor: float = 0.0
    sum_spread_factor_sq: float = 0.0
    interval_count: int = 0
    sum_price_factor_sq: float = 0.0

    @classmethod
    def from_values(cls, day: date, trades: Iterable[int], volumes: Iterable[float],
                    price_factors: Iterable[float], spread_factors: Iterable[float],
                    minutes_per_interval: float = 1.0) -> "DailyAggregate":
        trades = list(trades)
        pf = list(price_factors)
        sf = list(spread_factors)
        if len(pf) != len(sf):
            raise ValueError("price and spread factor series must align")
        return cls(
            day=day,
            total_trades=int(sum(trades)),
            total_volume=math.fsum(volumes),
            trading_minutes=len(trades) * minutes_per_interval,
            sum_price_factor=math.fsum(pf),
            sum_spread_factor=math.fsum(sf),
            sum_spread_factor_sq=math.fsum(x * x for x in sf),
            interval_count=len(sf),
            sum_price_factor_sq=math.fsum(x * x for x in pf),
        )


@dataclass
class RollingWindow:
    capacity_days: int = 30
    days: deque = field(default_factory=deque)

    def __post_init__(self):
        if self.capacity_days < 1:
            raise ValueError("capacity_days must be >= 1")
        self.days = deque(self.days)

    def __len__(self) -> int:
        return len(self.days)

    @property
    def full(self) -> bool:
        return len(self.days) == self.capacity_days

    def copy(self) -> "RollingWindow":
        return RollingWindow(self.capacity_days, deque(self.days))


def push_day(window: RollingWindow, aggregate: DailyAggregate) -> RollingWindow:
    """Append a completed day, evicting the oldest one past capacity (in place)."""
    if window.days and aggregate.day <= window.days[-1].day:
        raise OutOfOrderDay(f"{aggregate.day} is not after {window.days[-1].day}")
    window.days.append(aggregate)
    while len(window.days) > window.capacity_days:
        window.days.popleft()
    return window


def rolling_rate_average(window: RollingWindow, which: str) -> float:
    """Average trades (``which="trades"``) or volume (``"volume"``) per minute."""
    if not window.days:
        raise EmptyWindow("rolling window is empty")
    minutes = math.fsum(d.trading_minutes for d in window.days)
    if minutes <= 0:
        raise EmptyWindow("rolling window holds no trading minutes")
    if which == "trades":
        total = float(sum(d.total_trades for d in window.days))
    elif which == "volume":
        total = math.fsum(d.total_volume for d in window.days)
    else:
        raise ValueError(f"unknown series {which!r}")
    return total / minutes


def window_mean(window: RollingWindow, series: str) -> float:
    n = sum(d.interval_count for d in window.days)
    if n < 1:
        raise InsufficientData("need at least one interval for a mean")
    return _series_sum(window, series) / n


def window_stats(window: RollingWindow, series: str) -> tuple[float, float]:
    """(mean, sample standard deviation) of ``spread_factor`` or ``price_factor``."""
    n = sum(d.interval_count for d in window.days)
    if n < 2:
        raise InsufficientData(f"need at least 2 intervals for a standard deviation, have {n}")
    s1 = _series_sum(window, series)
    s2 = _series_sum_sq(window, series)
    mean = s1 / n
    var = (s2 - s1 * s1 / n) / (n - 1)
    return mean, math.sqrt(max(var, 0.0))


def _series_sum(window: RollingWindow, series: str) -> float:
    if series == "spread_factor":
        return math.fsum(d.sum_spread_factor for d in window.days)
    if series == "price_factor":
        return math.fsum(d.sum_price_factor for d in window.days)
    raise ValueError(f"unknown series {series!r}")


def _series_sum_sq(window: RollingWindow, series: str) -> float:
    if series == "spread_factor":
        return math.fsum(d.sum_spread_factor_sq for d in window.days)
    if series == "price_factor":
        return math.fsum(d.sum_price_factor_sq for d in window.days)
    raise ValueError(f"unknown series {series!r}")
