"""Spread consolidation, clamping, quoting and the per-interval feedback loop.

Statistics used to quote an interval are frozen at the last UTC day boundary,
so a whole trading day can be evaluated as one vectorised block
(``run_day``). ``step`` is the interval-at-a-time equivalent used for live
streaming; both paths produce bit-identical snapshots.
"""

from __future__ import annotations

import copy
from collections.abc import Iterable
from dataclasses import dataclass, field, fields, replace
from datetime import date, timedelta

import numpy as np

from .errors import (
    InsufficientData,
    NonPositiveBid,
    NotWarmedUp,
    TimestampMismatch,
    ZeroGamma,
)
from .factors import (
    VolatilityState,
    init_volatility,
    log_ratio_factors,
    trade_count_factor,
    update_gamma,
    update_volatility,
    volatility_path,
    volume_factor,
)
from .market_data import (
    SECONDS_PER_DAY,
    BarSeries,
    MinuteBar,
    TradingCalendar,
    log_return,
    log_returns,
    proxy_price,
)
from .rolling import (
    DailyAggregate,
    RollingWindow,
    push_day,
    rolling_rate_average,
    window_stats,
)
from .simulation import ActivitySeries, IntervalActivity

INCREASED, UNCHANGED, DECREASED = 1, 0, -1
CLASS_NAMES = {INCREASED: "increased", UNCHANGED: "unchanged", DECREASED: "decreased"}
_EPOCH = date(1970, 1, 1)


@dataclass(frozen=True)
class ConsolidationWeights:
    w_p: float = 1 / 3
    w_tc: float = 1 / 3
    w_v: float = 1 / 3

    def __post_init__(self):
        if min(self.w_p, self.w_tc, self.w_v) < 0.0:
            raise ValueError("weights must be non-negative")
        if abs(self.w_p + self.w_tc + self.w_v - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")


@dataclass(frozen=True)
class ClampParams:
    m: float = 2.0
    n: float = 3.0

    def __post_init__(self):
        if not (self.m > 0.0 and self.n > 0.0):
            raise ValueError("m and n must be positive")


@dataclass(frozen=True)
class SpreadConfig:
    base_spread: float = 0.0002
    min_spread: float = 0.00001

    def __post_init__(self):
        if not (0.0 < self.min_spread < self.base_spread):
            raise ValueError("need 0 < min_spread < base_spread")


@dataclass(frozen=True)
class EngineConfig:
    alpha: float = 0.9
    beta: float = 0.1
    volatility_mode: str = "absolute"
    weights: ConsolidationWeights = field(default_factory=ConsolidationWeights)
    clamp: ClampParams = field(default_factory=ClampParams)
    spread: SpreadConfig = field(default_factory=SpreadConfig)
    window_days: int = 30
    calendar: TradingCalendar = field(default_factory=TradingCalendar)


@dataclass(frozen=True)
class Quote:
    bid: float
    offer: float
    mid: float


@dataclass(frozen=True)
class FactorSnapshot:
    timestamp: int  # epoch seconds, UTC
    price_factor: float
    trade_count_factor: float
    volume_factor: float
    raw_spread_factor: float
    mu_srf: float
    sigma_srf: float
    spread_factor: float
    spread_delta: float
    quoted_spread: float
    classification: str
    upper_bound_hit: bool
    lower_bound_hit: bool
    interval_volume: float
    trade_count: int
    mid: float
    bid: float
    offer: float


@dataclass(frozen=True)
class DayStats:
    """Everything frozen at a day boundary for the following day's intervals."""

    mu_srf: float
    sigma_srf: float
    gamma: float
    tc_avg: float  # per interval
    v_avg: float   # per interval


# -- pure per-interval operations -------------------------------------------

def consolidate(price_factor: float, trade_count_factor: float, volume_factor: float,
                weights: ConsolidationWeights) -> float:
    return weights.w_p * price_factor + weights.w_tc * trade_count_factor + weights.w_v * volume_factor


def clamp_spread_factor(s_rf: float, mu: float, sigma: float,
                        params: ClampParams = ClampParams()) -> tuple[float, bool, bool]:
    """Clamp the raw spread factor into ``[mu - sigma/n, mu + sigma/m]``."""
    upper = mu + sigma / params.m
    lower = mu - sigma / params.n
    return min(upper, max(lower, s_rf)), s_rf > upper, s_rf < lower


def apply_spread(s_f: float, mu: float,
                 config: SpreadConfig = SpreadConfig()) -> tuple[float, float, str]:
    """Turn the clamped factor into (spread_delta, quoted_spread, classification).

    The adjustment is the clamped factor's deviation from its rolling mean.
    Flooring at ``min_spread`` shrinks the effective delta so quotes never cross.
    """
    quoted = max(config.base_spread + (s_f - mu), config.min_spread)
    delta = quoted - config.base_spread
    if delta > 0.0:
        cls = "increased"
    elif delta < 0.0:
        cls = "decreased"
    else:
        cls = "unchanged"
    return delta, quoted, cls


def make_quote(mid: float, quoted_spread: float) -> Quote:
    half = quoted_spread / 2.0
    bid, offer = mid - half, mid + half
    if not bid > 0.0:
        raise NonPositiveBid(f"mid {mid!r} too small for spread {quoted_spread!r}")
    return Quote(bid=bid, offer=offer, mid=mid)


# -- engine state --------------------------------------------------------------

@dataclass
class EngineState:
    config: EngineConfig
    volatility: VolatilityState
    window: RollingWindow
    stats: DayStats | None = None
    last_rate: float | None = None
    open_day: int | None = None
    warmed_up: bool = False
    # intervals of the open day, folded into a DailyAggregate at the boundary
    day_trades: list = field(default_factory=list)
    day_volumes: list = field(default_factory=list)
    day_price_factors: list = field(default_factory=list)
    day_spread_factors: list = field(default_factory=list)

    @property
    def gamma(self) -> float:
        return self.stats.gamma if self.stats else 0.0

    def copy(self) -> "EngineState":
        return copy.deepcopy(self)


def _day_date(day_number: int) -> date:
    return _EPOCH + timedelta(days=int(day_number))


def _refresh_stats(state: EngineState) -> None:
    cfg = state.config
    mu, sigma = window_stats(state.window, "spread_factor")
    per_interval = cfg.calendar.minutes_per_interval
    try:
        gamma = update_gamma(state.window)
    except ZeroGamma:
        # flat prices: keep the last usable scale, else disable activity factors
        gamma = state.stats.gamma if state.stats else 0.0
    state.stats = DayStats(
        mu_srf=mu,
        sigma_srf=sigma,
        gamma=gamma,
        tc_avg=rolling_rate_average(state.window, "trades") * per_interval,
        v_avg=rolling_rate_average(state.window, "volume") * per_interval,
    )


def close_day(state: EngineState) -> DailyAggregate:
    """Fold the open day's intervals into an aggregate and reset the accumulator."""
    if state.open_day is None:
        raise InsufficientData("no open trading day to close")
    agg = DailyAggregate.from_values(
        _day_date(state.open_day), state.day_trades, state.day_volumes,
        state.day_price_factors, state.day_spread_factors,
        minutes_per_interval=state.config.calendar.minutes_per_interval,
    )
    state.open_day = None
    state.day_trades, state.day_volumes = [], []
    state.day_price_factors, state.day_spread_factors = [], []
    return agg


def daily_refresh(state: EngineState, completed_day: DailyAggregate) -> EngineState:
    """Push a finished day and recompute every statistic used by the next day."""
    push_day(state.window, completed_day)
    _refresh_stats(state)
    return state


# -- warmup --------------------------------------------------------------------

def warm_up(bars: BarSeries, activity: ActivitySeries, config: EngineConfig) -> EngineState:
    """Seed volatility, gamma and all windows by replaying the warmup days.

    The recursion starts from the sample std of the warmup returns and runs
    through the warmup; gamma and the activity averages are the warmup's
    in-sample values, which then give the warmup spread factors.
    """
    _check_alignment(bars, activity)
    rates = bars.proxy_rates()
    eps = log_returns(rates)
    sigma0 = init_volatility(eps.tolist())
    vol0 = VolatilityState(sigma0, config.alpha, config.beta, config.volatility_mode)
    pf = volatility_path(vol0, eps)
    days = bars.days()
    counts = activity.trade_count
    volumes = activity.volume
    per_interval = config.calendar.minutes_per_interval

    # P_f and S_rf exist from the second bar on
    pf_full = np.concatenate([[np.nan], pf])
    provisional = RollingWindow(config.window_days)
    for d, sl in _day_slices(days):
        push_day(provisional, DailyAggregate.from_values(
            _day_date(d), counts[sl].tolist(), volumes[sl].tolist(),
            _finite(pf_full[sl]), [0.0] * np.isfinite(pf_full[sl]).sum(), per_interval))
    try:
        gamma = update_gamma(provisional)
    except ZeroGamma:
        gamma = 0.0
    tc_avg = rolling_rate_average(provisional, "trades") * per_interval
    v_avg = rolling_rate_average(provisional, "volume") * per_interval

    tcf, vf = _activity_factors(counts[1:], volumes[1:], tc_avg, v_avg, gamma, lower=None)
    w = config.weights
    srf = w.w_p * pf + w.w_tc * tcf + w.w_v * vf
    srf_full = np.concatenate([[np.nan], srf])

    window = RollingWindow(config.window_days)
    for d, sl in _day_slices(days):
        push_day(window, DailyAggregate.from_values(
            _day_date(d), counts[sl].tolist(), volumes[sl].tolist(),
            _finite(pf_full[sl]), _finite(srf_full[sl]), per_interval))
    if len(window) < config.window_days:
        raise InsufficientData(f"warmup spans {len(window)} days, need {config.window_days}")

    state = EngineState(
        config=config,
        volatility=replace(vol0, sigma=float(pf[-1])),
        window=window,
        last_rate=float(rates[-1]),
        warmed_up=True,
    )
    state.stats = DayStats(0.0, 0.0, gamma, tc_avg, v_avg)  # provisional, replaced below
    _refresh_stats(state)
    return state


def _finite(values: np.ndarray) -> list[float]:
    return values[np.isfinite(values)].tolist()


def _day_slices(days: np.ndarray) -> Iterable[tuple[int, slice]]:
    """(day number, slice) for each run of equal day numbers."""
    if days.size == 0:
        return
    cuts = np.flatnonzero(np.diff(days)) + 1
    starts = np.concatenate([[0], cuts])
    ends = np.concatenate([cuts, [days.size]])
    for s, e in zip(starts.tolist(), ends.tolist()):
        yield int(days[s]), slice(s, e)


def _check_alignment(bars: BarSeries, activity: ActivitySeries) -> None:
    if len(bars) != len(activity) or not np.array_equal(bars.timestamps, activity.timestamps):
        raise TimestampMismatch("activity timestamps do not match bar timestamps")


def _activity_factors(counts: np.ndarray, volumes: np.ndarray, tc_avg: float, v_avg: float,
                      gamma: float, lower: float | None) -> tuple[np.ndarray, np.ndarray]:
    counts = np.asarray(counts)
    volumes = np.asarray(volumes, dtype=np.float64)
    idle = counts <= 0
    if not idle.any():
        return (log_ratio_factors(counts, tc_avg, gamma),
                log_ratio_factors(volumes, v_avg, gamma))
    tcf = np.empty(counts.size)
    vf = np.empty(counts.size)
    busy = ~idle
    tcf[busy] = log_ratio_factors(counts[busy], tc_avg, gamma)
    vf[busy] = log_ratio_factors(volumes[busy], v_avg, gamma)
    # zero activity saturates the decrease: factors sit at the clamp floor
    floor = 0.0 if lower is None else lower
    tcf[idle] = floor
    vf[idle] = floor
    return tcf, vf


# -- per-interval step -----------------------------------------------------------

def step(state: EngineState, bar: MinuteBar,
         activity: IntervalActivity) -> tuple[Quote, FactorSnapshot, EngineState]:
    """Quote one interval. Mutates and returns ``state``.

    The day boundary is not handled here; callers close the day and call
    ``daily_refresh`` first (``advance`` does both).
    """
    if not state.warmed_up or state.stats is None:
        raise NotWarmedUp("engine has not been warmed up")
    ts = bar.epoch
    act_ts = activity.timestamp
    act_ts = int(act_ts.timestamp()) if hasattr(act_ts, "timestamp") else act_ts
    if act_ts != ts:
        raise TimestampMismatch(f"bar at {ts} but activity at {act_ts}")
    day = ts // SECONDS_PER_DAY
    if state.open_day is None:
        state.open_day = day
    elif day != state.open_day:
        raise TimestampMismatch("bar belongs to a new day; run daily_refresh first")

    cfg = state.config
    st = state.stats
    rate = proxy_price(bar).rate
    eps = log_return(state.last_rate, rate)
    state.volatility = update_volatility(state.volatility, eps)
    p_f = state.volatility.sigma
    if activity.trade_count <= 0:
        tc_f = v_f = st.mu_srf - st.sigma_srf / cfg.clamp.n
    else:
        tc_f = trade_count_factor(activity.trade_count, st.tc_avg, st.gamma)
        v_f = volume_factor(activity.volume, st.v_avg, st.gamma)
    s_rf = consolidate(p_f, tc_f, v_f, cfg.weights)
    s_f, up, lo = clamp_spread_factor(s_rf, st.mu_srf, st.sigma_srf, cfg.clamp)
    delta, quoted, cls = apply_spread(s_f, st.mu_srf, cfg.spread)
    quote = make_quote(rate, quoted)

    state.day_trades.append(activity.trade_count)
    state.day_volumes.append(activity.volume)
    state.day_price_factors.append(p_f)
    state.day_spread_factors.append(s_rf)
    state.last_rate = rate

    snap = FactorSnapshot(
        timestamp=ts, price_factor=p_f, trade_count_factor=tc_f, volume_factor=v_f,
        raw_spread_factor=s_rf, mu_srf=st.mu_srf, sigma_srf=st.sigma_srf, spread_factor=s_f,
        spread_delta=delta, quoted_spread=quoted, classification=cls,
        upper_bound_hit=up, lower_bound_hit=lo, interval_volume=activity.volume,
        trade_count=activity.trade_count, mid=quote.mid, bid=quote.bid, offer=quote.offer,
    )
    return quote, snap, state


def advance(state: EngineState, bar: MinuteBar,
            activity: IntervalActivity) -> tuple[Quote, FactorSnapshot, EngineState]:
    """``step`` preceded by a day-boundary refresh when the bar opens a new UTC day."""
    if state.open_day is not None and bar.epoch // SECONDS_PER_DAY != state.open_day:
        daily_refresh(state, close_day(state))
    return step(state, bar, activity)


# -- vectorised trading day ------------------------------------------------------

_FLOAT_COLUMNS = ("price_factor", "trade_count_factor", "volume_factor", "raw_spread_factor",
                  "mu_srf", "sigma_srf", "spread_factor", "spread_delta", "quoted_spread",
                  "interval_volume", "mid", "bid", "offer")


@dataclass
class SnapshotBlock:
    """Columnar run of snapshots; ``classification`` holds -1/0/+1."""

    timestamp: np.ndarray
    price_factor: np.ndarray
    trade_count_factor: np.ndarray
    volume_factor: np.ndarray
    raw_spread_factor: np.ndarray
    mu_srf: np.ndarray
    sigma_srf: np.ndarray
    spread_factor: np.ndarray
    spread_delta: np.ndarray
    quoted_spread: np.ndarray
    classification: np.ndarray
    upper_bound_hit: np.ndarray
    lower_bound_hit: np.ndarray
    interval_volume: np.ndarray
    trade_count: np.ndarray
    mid: np.ndarray
    bid: np.ndarray
    offer: np.ndarray

    @classmethod
    def empty(cls) -> "SnapshotBlock":
        kw = {f.name: np.empty(0, dtype=np.float64) for f in fields(cls)}
        kw["timestamp"] = np.empty(0, dtype=np.int64)
        kw["trade_count"] = np.empty(0, dtype=np.int64)
        kw["classification"] = np.empty(0, dtype=np.int8)
        kw["upper_bound_hit"] = np.empty(0, dtype=bool)
        kw["lower_bound_hit"] = np.empty(0, dtype=bool)
        return cls(**kw)

    @classmethod
    def concat(cls, blocks: list["SnapshotBlock"]) -> "SnapshotBlock":
        if not blocks:
            return cls.empty()
        return cls(**{f.name: np.concatenate([getattr(b, f.name) for b in blocks])
                      for f in fields(cls)})

    @classmethod
    def from_snapshots(cls, snaps: list[FactorSnapshot]) -> "SnapshotBlock":
        if not snaps:
            return cls.empty()
        code = {v: k for k, v in CLASS_NAMES.items()}
        kw = {}
        for f in fields(cls):
            col = [getattr(s, f.name) for s in snaps]
            if f.name == "classification":
                kw[f.name] = np.array([code[c] for c in col], dtype=np.int8)
            elif f.name in ("timestamp", "trade_count"):
                kw[f.name] = np.array(col, dtype=np.int64)
            elif f.name.endswith("_hit"):
                kw[f.name] = np.array(col, dtype=bool)
            else:
                kw[f.name] = np.array(col, dtype=np.float64)
        return cls(**kw)

    def __len__(self) -> int:
        return len(self.timestamp)

    def __getitem__(self, i: int) -> FactorSnapshot:
        kw = {name: float(getattr(self, name)[i]) for name in _FLOAT_COLUMNS}
        return FactorSnapshot(
            timestamp=int(self.timestamp[i]),
            classification=CLASS_NAMES[int(self.classification[i])],
            upper_bound_hit=bool(self.upper_bound_hit[i]),
            lower_bound_hit=bool(self.lower_bound_hit[i]),
            trade_count=int(self.trade_count[i]),
            **kw,
        )

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]


def run_day(state: EngineState, bars: BarSeries, activity: ActivitySeries) -> SnapshotBlock:
    """Quote every interval of one UTC day against the frozen stats; mutates ``state``.

    Leaves the day open; follow with ``daily_refresh(state, close_day(state))``.
    """
    if not state.warmed_up or state.stats is None:
        raise NotWarmedUp("engine has not been warmed up")
    _check_alignment(bars, activity)
    days = np.unique(bars.days())
    if days.size != 1:
        raise TimestampMismatch("run_day needs bars from exactly one UTC day")
    day = int(days[0])
    if state.open_day is not None and state.open_day != day:
        raise TimestampMismatch("bar belongs to a new day; run daily_refresh first")

    cfg = state.config
    st = state.stats
    rates = bars.proxy_rates()
    eps = log_returns(np.concatenate([[state.last_rate], rates]))
    pf = volatility_path(state.volatility, eps)
    lower = st.mu_srf - st.sigma_srf / cfg.clamp.n
    upper = st.mu_srf + st.sigma_srf / cfg.clamp.m
    tcf, vf = _activity_factors(activity.trade_count, activity.volume,
                                st.tc_avg, st.v_avg, st.gamma, lower)
    w = cfg.weights
    srf = w.w_p * pf + w.w_tc * tcf + w.w_v * vf
    sf = np.minimum(upper, np.maximum(lower, srf))
    quoted = np.maximum(cfg.spread.base_spread + (sf - st.mu_srf), cfg.spread.min_spread)
    delta = quoted - cfg.spread.base_spread
    half = quoted / 2.0
    bid = rates - half
    offer = rates + half
    if not np.all(bid > 0.0):
        raise NonPositiveBid("mid too small for quoted spread")
    n = len(bars)

    state.volatility = replace(state.volatility, sigma=float(pf[-1]))
    state.last_rate = float(rates[-1])
    state.open_day = day
    state.day_trades.extend(activity.trade_count.tolist())
    state.day_volumes.extend(activity.volume.tolist())
    state.day_price_factors.extend(pf.tolist())
    state.day_spread_factors.extend(srf.tolist())

    return SnapshotBlock(
        timestamp=bars.timestamps.copy(),
        price_factor=pf,
        trade_count_factor=tcf,
        volume_factor=vf,
        raw_spread_factor=srf,
        mu_srf=np.full(n, st.mu_srf),
        sigma_srf=np.full(n, st.sigma_srf),
        spread_factor=sf,
        spread_delta=delta,
        quoted_spread=quoted,
        classification=np.sign(delta).astype(np.int8),
        upper_bound_hit=srf > upper,
        lower_bound_hit=srf < lower,
        interval_volume=activity.volume.copy(),
        trade_count=activity.trade_count.copy(),
        mid=rates,
        bid=bid,
        offer=offer,
    )
