"""Lognormal simulation of per-interval trade counts and trade sizes.

Each interval consumes exactly two standard-normal draws from a Philox
(counter-based) generator: the first drives the trade count, the second
the average trade size. Draw ``k`` therefore belongs to the ``k``-th bar,
and any prefix of a simulated period is reproduced bit-exactly by a shorter
run with the same seed.
"""

from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .errors import EmptyInput, MalformedRow, NonMonotonicTimestamp, NonPositiveParameter
from .market_data import BarSeries, exp_array, TradingCalendar, parse_timestamp, to_datetime

ACTIVITY_HEADER = "timestamp_utc,trade_count,volume_usd"
DAYS_PER_MONTH = 30
RNG_ALGORITHM = f"numpy.random.Philox(4x64-10)+Generator.standard_normal/numpy-{np.__version__}"


@dataclass(frozen=True)
class LogNormalParams:
    mu: float
    sigma: float

    @property
    def mean(self) -> float:
        return math.exp(self.mu + 0.5 * self.sigma * self.sigma)


@dataclass(frozen=True)
class SimulationConfig:
    mean_trades_per_interval: float = 60.0
    target_monthly_volume: float = 300e9
    cv_count: float = 0.5
    cv_size: float = 0.5
    seed: int = 20130724

    def mean_trade_size(self, calendar: TradingCalendar) -> float:
        """Average trade size that makes a 30-day month hit the volume target."""
        trades_per_month = self.mean_trades_per_interval * calendar.intervals_per_day * DAYS_PER_MONTH
        return self.target_monthly_volume / trades_per_month

    def params(self, calendar: TradingCalendar) -> tuple[LogNormalParams, LogNormalParams]:
        return (calibrate_lognormal(self.mean_trades_per_interval, self.cv_count),
                calibrate_lognormal(self.mean_trade_size(calendar), self.cv_size))


@dataclass(frozen=True)
class IntervalActivity:
    timestamp: object  # datetime for the scalar API; epoch seconds inside ActivitySeries
    trade_count: int
    avg_trade_size: float
    volume: float


class ActivitySeries:
    """Columnar activity aligned one-to-one with a ``BarSeries``."""

    def __init__(self, timestamps, trade_count, volume, avg_trade_size=None):
        self.timestamps = np.asarray(timestamps, dtype=np.int64)
        self.trade_count = np.asarray(trade_count, dtype=np.int64)
        self.volume = np.asarray(volume, dtype=np.float64)
        if avg_trade_size is None:
            with np.errstate(divide="ignore", invalid="ignore"):
                avg_trade_size = np.where(self.trade_count > 0,
                                          self.volume / np.maximum(self.trade_count, 1), 0.0)
        self.avg_trade_size = np.asarray(avg_trade_size, dtype=np.float64)

    def __len__(self) -> int:
        return len(self.timestamps)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return ActivitySeries(self.timestamps[i], self.trade_count[i],
                                  self.volume[i], self.avg_trade_size[i])
        return IntervalActivity(to_datetime(int(self.timestamps[i])), int(self.trade_count[i]),
                                float(self.avg_trade_size[i]), float(self.volume[i]))


def calibrate_lognormal(target_mean: float, cv: float) -> LogNormalParams:
    """Lognormal (mu, sigma) whose mean is ``target_mean`` and whose CV is ``cv``."""
    if not (target_mean > 0.0):
        raise NonPositiveParameter(f"target_mean must be > 0, got {target_mean!r}")
    if not (cv > 0.0):
        raise NonPositiveParameter(f"cv must be > 0, got {cv!r}")
    var = math.log1p(cv * cv)
    return LogNormalParams(mu=math.log(target_mean) - 0.5 * var, sigma=math.sqrt(var))


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _activity_from_normals(z: np.ndarray, count_params: LogNormalParams,
                           size_params: LogNormalParams):
    # z has shape (n, 2): column 0 -> count, column 1 -> size
    raw_count = exp_array(count_params.mu + count_params.sigma * z[:, 0])
    count = np.maximum(1, np.rint(raw_count)).astype(np.int64)
    size = exp_array(size_params.mu + size_params.sigma * z[:, 1])
    return count, size, count * size


def sample_interval_activity(count_params: LogNormalParams, size_params: LogNormalParams,
                             rng: np.random.Generator, timestamp=None) -> IntervalActivity:
    """One interval's draw; advances ``rng`` by exactly two normals."""
    z = rng.standard_normal((1, 2))
    count, size, volume = _activity_from_normals(z, count_params, size_params)
    return IntervalActivity(timestamp, int(count[0]), float(size[0]), float(volume[0]))


def simulate_period(calendar: TradingCalendar, bars: BarSeries,
                    config: SimulationConfig) -> ActivitySeries:
    if len(bars) == 0:
        raise EmptyInput("cannot simulate activity for an empty bar series")
    count_params, size_params = config.params(calendar)
    z = make_rng(config.seed).standard_normal((len(bars), 2))
    count, size, volume = _activity_from_normals(z, count_params, size_params)
    return ActivitySeries(bars.timestamps, count, volume, size)


class ActivityStream:
    """Incremental simulator for the streaming engine (same draws as ``simulate_period``)."""

    def __init__(self, calendar: TradingCalendar, config: SimulationConfig):
        self.count_params, self.size_params = config.params(calendar)
        self.rng = make_rng(config.seed)

    def next(self, timestamp) -> IntervalActivity:
        return sample_interval_activity(self.count_params, self.size_params, self.rng, timestamp)


def parse_activity(source: TextIO | Iterable[str]) -> ActivitySeries:
    """Read supplied desk activity (``timestamp_utc,trade_count,volume_usd``)."""
    lines = iter(source)
    header = next(lines, None)
    if header is None or not header.strip():
        raise EmptyInput("activity stream has no header")
    if header.strip().replace(" ", "") != ACTIVITY_HEADER:
        raise MalformedRow(1, f"expected header {ACTIVITY_HEADER!r}")
    ts_out, counts, vols = [], [], []
    for lineno, line in enumerate(lines, start=2):
        line = line.strip()
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != 3:
            raise MalformedRow(lineno, f"expected 3 fields, got {len(fields)}")
        try:
            ts = parse_timestamp(fields[0].strip())
            count = int(fields[1])
            vol = float(fields[2])
        except ValueError as exc:
            raise MalformedRow(lineno, str(exc)) from None
        if count < 0 or not math.isfinite(vol) or vol < 0.0:
            raise MalformedRow(lineno, "trade_count and volume_usd must be non-negative")
        if (count == 0) != (vol == 0.0):
            raise MalformedRow(lineno, "zero trades must carry zero volume and vice versa")
        if ts_out and ts <= ts_out[-1]:
            raise NonMonotonicTimestamp(lineno)
        ts_out.append(ts)
        counts.append(count)
        vols.append(vol)
    if not ts_out:
        raise EmptyInput("activity stream has no data rows")
    return ActivitySeries(ts_out, counts, vols)
