"""Minute OHLC bars, proxy trade prices, log-return innovations and the calendar.

Timestamps are carried internally as integer UTC epoch seconds; the public
``MinuteBar`` exposes them as timezone-aware datetimes.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from datetime import date, datetime, timezone
from functools import lru_cache
from typing import TextIO, overload

import numpy as np

from .errors import EmptyInput, MalformedRow, NonMonotonicTimestamp, NonPositiveRate

BAR_HEADER = "timestamp_utc,open,high,low,close"
SECONDS_PER_DAY = 86_400
_EPOCH_ORDINAL = date(1970, 1, 1).toordinal()


@dataclass(frozen=True)
class TradingCalendar:
    """Interval length and UTC-midnight day boundaries."""

    interval_seconds: int = 60
    minutes_per_day: int = 1440

    def __post_init__(self):
        if self.interval_seconds <= 0 or SECONDS_PER_DAY % self.interval_seconds:
            raise ValueError("interval_seconds must be positive and divide 86400")

    @property
    def intervals_per_day(self) -> int:
        return SECONDS_PER_DAY // self.interval_seconds

    @property
    def minutes_per_interval(self) -> float:
        return self.interval_seconds / 60.0

    @staticmethod
    def day_of(ts: int) -> int:
        """Day number (days since 1970-01-01, UTC)."""
        return ts // SECONDS_PER_DAY

    @staticmethod
    def hour_of(ts: int) -> int:
        return (ts % SECONDS_PER_DAY) // 3600


@dataclass(frozen=True)
class MinuteBar:
    timestamp: datetime
    open: float
    high: float
    low: float
    close: float

    @property
    def epoch(self) -> int:
        return int(self.timestamp.timestamp())


@dataclass(frozen=True)
class ProxyPrice:
    timestamp: datetime
    rate: float


# -- timestamps ----------------------------------------------------------------

@lru_cache(maxsize=4096)
def _day_epoch(text: str) -> int:
    return (date.fromisoformat(text).toordinal() - _EPOCH_ORDINAL) * SECONDS_PER_DAY


def parse_timestamp(text: str) -> int:
    """Parse ``YYYY-MM-DDTHH:MM[:SS]Z`` into epoch seconds.

    Only minute resolution is accepted, so a seconds field must be ``00``.
    """
    n = len(text)
    if n not in (17, 20) or text[10] != "T" or text[-1] != "Z" or text[13] != ":":
        raise ValueError(f"bad timestamp {text!r}")
    if n == 20 and (text[16] != ":" or text[17:19] != "00"):
        raise ValueError(f"timestamp {text!r} is not at minute resolution")
    hh, mm = text[11:13], text[14:16]
    if not (hh.isdigit() and mm.isdigit()):
        raise ValueError(f"bad timestamp {text!r}")
    h, m = int(hh), int(mm)
    if h > 23 or m > 59:
        raise ValueError(f"bad timestamp {text!r}")
    return _day_epoch(text[:10]) + h * 3600 + m * 60


def format_timestamp(ts: int) -> str:
    return datetime.fromtimestamp(ts, timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def format_timestamps(ts: np.ndarray) -> list[str]:
    """Vectorised ``format_timestamp``."""
    stamps = np.datetime_as_string(np.asarray(ts, dtype="datetime64[s]"), unit="s")
    return [s + "Z" for s in stamps.tolist()]


def to_datetime(ts: int) -> datetime:
    return datetime.fromtimestamp(ts, timezone.utc)


# -- bar series ----------------------------------------------------------------

class BarSeries(Sequence):
    """Columnar, immutable run of bars; indexing yields ``MinuteBar``."""

    def __init__(self, timestamps, open_, high, low, close):
        self.timestamps = np.asarray(timestamps, dtype=np.int64)
        self.open = np.asarray(open_, dtype=np.float64)
        self.high = np.asarray(high, dtype=np.float64)
        self.low = np.asarray(low, dtype=np.float64)
        self.close = np.asarray(close, dtype=np.float64)
        for arr in (self.timestamps, self.open, self.high, self.low, self.close):
            arr.setflags(write=False)

    @classmethod
    def from_bars(cls, bars: Iterable[MinuteBar]) -> "BarSeries":
        bars = list(bars)
        return cls(
            [b.epoch for b in bars],
            [b.open for b in bars],
            [b.high for b in bars],
            [b.low for b in bars],
            [b.close for b in bars],
        )

    def __len__(self) -> int:
        return len(self.timestamps)

    @overload
    def __getitem__(self, i: int) -> MinuteBar: ...
    @overload
    def __getitem__(self, i: slice) -> "BarSeries": ...

    def __getitem__(self, i):
        if isinstance(i, slice):
            return BarSeries(self.timestamps[i], self.open[i], self.high[i],
                             self.low[i], self.close[i])
        return MinuteBar(to_datetime(int(self.timestamps[i])), float(self.open[i]),
                         float(self.high[i]), float(self.low[i]), float(self.close[i]))

    def __iter__(self) -> Iterator[MinuteBar]:
        for i in range(len(self)):
            yield self[i]

    def proxy_rates(self) -> np.ndarray:
        return (self.open + self.high + self.low + self.close) / 4.0

    def days(self) -> np.ndarray:
        return self.timestamps // SECONDS_PER_DAY


def _check_bar(o: float, h: float, l: float, c: float) -> str | None:
    if not all(math.isfinite(x) for x in (o, h, l, c)):
        return "non-finite price"
    if min(o, h, l, c) <= 0.0:
        return "prices must be strictly positive"
    if not (l <= o <= h and l <= c <= h):
        return "OHLC ordering violated (need low <= open, close <= high)"
    return None


def parse_minute_bars(source: TextIO | Iterable[str], interval_seconds: int = 60) -> BarSeries:
    """Read the bar CSV format; any malformed row rejects the whole stream.

    Row numbers in errors are 1-based file line numbers (the header is line 1).
    A vectorised pass handles clean input; if it finds any problem the strict
    row-by-row parser reruns to name the offending row.
    """
    lines = list(source)
    if lines:
        bars = _parse_fast(lines, interval_seconds)
        if bars is not None:
            return bars
    return _parse_strict(lines, interval_seconds)


def _parse_fast(lines: list[str], interval_seconds: int) -> BarSeries | None:
    if lines[0].strip().replace(" ", "") != BAR_HEADER:
        return None
    body = [ln for ln in (x.strip() for x in lines[1:]) if ln]
    if not body:
        return None
    if not all(ln[19:21] == "Z," and ln[10] == "T" and ln.count(",") == 4 for ln in body):
        return None
    try:
        ts = np.array([ln[:19] for ln in body], dtype="datetime64[s]").astype(np.int64)
        prices = np.loadtxt(body, delimiter=",", usecols=(1, 2, 3, 4), dtype=np.float64, ndmin=2)
    except ValueError:
        return None
    o, h, l, c = prices.T
    ok = (np.isfinite(prices).all() and (prices > 0).all()
          and np.all((l <= o) & (o <= h) & (l <= c) & (c <= h)))
    gaps = np.diff(ts)
    if not ok or np.any(gaps <= 0) or np.any(gaps % interval_seconds) or np.any(ts % 60):
        return None
    return BarSeries(ts, o, h, l, c)


def _parse_strict(lines: Iterable[str], interval_seconds: int) -> BarSeries:
    lines = iter(lines)
    header = next(lines, None)
    if header is None or not header.strip():
        raise EmptyInput("bar stream has no header")
    if header.strip().replace(" ", "") != BAR_HEADER:
        raise MalformedRow(1, f"expected header {BAR_HEADER!r}")

    ts_out: list[int] = []
    o_out: list[float] = []
    h_out: list[float] = []
    l_out: list[float] = []
    c_out: list[float] = []
    prev = None
    for lineno, line in enumerate(lines, start=2):
        line = line.strip()
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != 5:
            raise MalformedRow(lineno, f"expected 5 fields, got {len(fields)}")
        try:
            ts = parse_timestamp(fields[0].strip())
        except ValueError as exc:
            raise MalformedRow(lineno, str(exc)) from None
        try:
            o, h, l, c = (float(f) for f in fields[1:])
        except ValueError:
            raise MalformedRow(lineno, "non-numeric price") from None
        problem = _check_bar(o, h, l, c)
        if problem:
            raise MalformedRow(lineno, problem)
        if prev is not None:
            if ts <= prev:
                raise NonMonotonicTimestamp(lineno)
            if (ts - prev) % interval_seconds:
                raise MalformedRow(lineno, f"spacing not a multiple of {interval_seconds}s")
        prev = ts
        ts_out.append(ts)
        o_out.append(o)
        h_out.append(h)
        l_out.append(l)
        c_out.append(c)
    if not ts_out:
        raise EmptyInput("bar stream has no data rows")
    return BarSeries(ts_out, o_out, h_out, l_out, c_out)


def write_minute_bars(bars: BarSeries, out: TextIO) -> None:
    """Serialise bars in the CSV format read by ``parse_minute_bars``."""
    out.write(BAR_HEADER + "\n")
    stamps = format_timestamps(bars.timestamps)
    for s, o, h, l, c in zip(stamps, bars.open.tolist(), bars.high.tolist(),
                             bars.low.tolist(), bars.close.tolist()):
        out.write(f"{s},{o:.6f},{h:.6f},{l:.6f},{c:.6f}\n")


def proxy_price(bar: MinuteBar) -> ProxyPrice:
    """Mean of open, high, low and close as the interval's trade-price proxy."""
    return ProxyPrice(bar.timestamp, (bar.open + bar.high + bar.low + bar.close) / 4.0)


def log_return(r_prev: float, r_curr: float) -> float:
    if not (r_prev > 0.0 and r_curr > 0.0):
        raise NonPositiveRate(f"rates must be positive, got {r_prev!r} -> {r_curr!r}")
    return math.log(r_curr / r_prev)


def log_returns(rates: np.ndarray) -> np.ndarray:
    """Innovations between consecutive proxy rates (length ``len(rates) - 1``)."""
    rates = np.asarray(rates, dtype=np.float64)
    if np.any(rates <= 0.0):
        raise NonPositiveRate("rates must be positive")
    return ln_array(rates[1:] / rates[:-1])


def ln_array(x: np.ndarray) -> np.ndarray:
    """Element-wise natural log through ``math.log``.

    numpy's vectorised log may differ from libm in the last ulp; routing the
    batch path through ``math.log`` keeps it bit-identical to the scalar path.
    """
    x = np.asarray(x, dtype=np.float64)
    return np.fromiter(map(math.log, x.tolist()), dtype=np.float64, count=x.size)


def exp_array(x: np.ndarray) -> np.ndarray:
    """Element-wise exp through ``math.exp`` (see ``ln_array``)."""
    x = np.asarray(x, dtype=np.float64)
    return np.fromiter(map(math.exp, x.tolist()), dtype=np.float64, count=x.size)
