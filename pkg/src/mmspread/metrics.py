"""P&L and quoting metrics, overall and bucketed by trading day and UTC hour.

Money is accumulated as integers (volume in cents, P&L in micro-dollars).
Integer addition is exact and order-free, so the day and hour breakdowns
always sum to the overall counters with no floating-point residue.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from datetime import date, timedelta

import numpy as np

from .engine import DECREASED, INCREASED, FactorSnapshot, SnapshotBlock
from .market_data import SECONDS_PER_DAY

CENTS = 100
MICROS = 1_000_000
PNL_ACCOUNTING = (
    "pnl_usd = sum(spread_delta * interval_volume / 2): each unit of volume trades on one "
    "side of the quote and captures half the change in spread, measured against a static "
    "base-spread counterfactual"
)
DAY_COLUMNS = ("date", "intervals", "increases", "decreases", "unchanged", "upper_hits",
               "lower_hits", "volume_increase_usd", "volume_decrease_usd", "pnl_usd")
_EPOCH = date(1970, 1, 1)


@dataclass
class MetricCounters:
    intervals_quoted: int = 0
    increases: int = 0
    decreases: int = 0
    unchanged: int = 0
    upper_bound_hits: int = 0
    lower_bound_hits: int = 0
    volume_on_increase_cents: int = 0
    volume_on_decrease_cents: int = 0
    pnl_micros: int = 0

    @property
    def volume_on_increase(self) -> float:
        return self.volume_on_increase_cents / CENTS

    @property
    def volume_on_decrease(self) -> float:
        return self.volume_on_decrease_cents / CENTS

    @property
    def pnl_increase(self) -> float:
        return self.pnl_micros / MICROS

    def add(self, other: "MetricCounters") -> None:
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))

    def as_row(self) -> list[str]:
        return [str(self.intervals_quoted), str(self.increases), str(self.decreases),
                str(self.unchanged), str(self.upper_bound_hits), str(self.lower_bound_hits),
                format_fixed(self.volume_on_increase_cents, 2),
                format_fixed(self.volume_on_decrease_cents, 2),
                format_fixed(self.pnl_micros, 6)]


@dataclass
class BacktestReport:
    overall: MetricCounters = field(default_factory=MetricCounters)
    by_day: dict[date, MetricCounters] = field(default_factory=dict)
    by_hour: dict[int, MetricCounters] = field(
        default_factory=lambda: {h: MetricCounters() for h in range(24)})
    metadata: dict = field(default_factory=dict)
    snapshots: SnapshotBlock = field(default_factory=SnapshotBlock.empty)


def format_fixed(value: int, digits: int) -> str:
    """Render an integer count of ``10**-digits`` units as a decimal string."""
    sign = "-" if value < 0 else ""
    whole, frac = divmod(abs(value), 10 ** digits)
    return f"{sign}{whole}.{frac:0{digits}d}"


def pnl_increment(spread_delta: float, interval_volume: float) -> float:
    """Spread capture gained versus quoting the base spread, in USD."""
    return spread_delta * interval_volume / 2


def _snapshot_counters(snap: FactorSnapshot) -> MetricCounters:
    c = MetricCounters(intervals_quoted=1,
                       upper_bound_hits=int(snap.upper_bound_hit),
                       lower_bound_hits=int(snap.lower_bound_hit),
                       pnl_micros=round(pnl_increment(snap.spread_delta, snap.interval_volume) * MICROS))
    cents = round(snap.interval_volume * CENTS)
    if snap.classification == "increased":
        c.increases = 1
        c.volume_on_increase_cents = cents
    elif snap.classification == "decreased":
        c.decreases = 1
        c.volume_on_decrease_cents = cents
    else:
        c.unchanged = 1
    return c


def _day_of(ts: int) -> date:
    return _EPOCH + timedelta(days=ts // SECONDS_PER_DAY)


def accumulate(report: BacktestReport, snapshot: FactorSnapshot) -> BacktestReport:
    """Fold one snapshot into the overall, day and hour counters (in place)."""
    c = _snapshot_counters(snapshot)
    report.overall.add(c)
    report.by_day.setdefault(_day_of(snapshot.timestamp), MetricCounters()).add(c)
    report.by_hour[(snapshot.timestamp % SECONDS_PER_DAY) // 3600].add(c)
    return report


def accumulate_block(report: BacktestReport, block: SnapshotBlock) -> BacktestReport:
    """Vectorised ``accumulate`` over a block; identical integer results."""
    if len(block) == 0:
        return report
    ts = block.timestamp
    cls = block.classification
    inc = cls == INCREASED
    dec = cls == DECREASED
    cents = np.rint(block.interval_volume * CENTS).astype(np.int64)
    pnl = np.rint(block.spread_delta * block.interval_volume / 2 * MICROS).astype(np.int64)
    day_key = ts // SECONDS_PER_DAY
    hour_key = (ts % SECONDS_PER_DAY) // 3600

    columns = {
        "intervals_quoted": np.ones(len(block), dtype=np.int64),
        "increases": inc.astype(np.int64),
        "decreases": dec.astype(np.int64),
        "unchanged": (~(inc | dec)).astype(np.int64),
        "upper_bound_hits": block.upper_bound_hit.astype(np.int64),
        "lower_bound_hits": block.lower_bound_hit.astype(np.int64),
        "volume_on_increase_cents": np.where(inc, cents, 0),
        "volume_on_decrease_cents": np.where(dec, cents, 0),
        "pnl_micros": pnl,
    }
    for keys, buckets, to_key in ((day_key, report.by_day, lambda k: _EPOCH + timedelta(days=k)),
                                  (hour_key, report.by_hour, lambda k: k)):
        uniq, inverse = np.unique(keys, return_inverse=True)
        sums = {}
        for name, col in columns.items():
            acc = np.zeros(uniq.size, dtype=np.int64)
            np.add.at(acc, inverse, col)
            sums[name] = acc.tolist()
        for j, k in enumerate(uniq.tolist()):
            buckets.setdefault(to_key(k), MetricCounters()).add(
                MetricCounters(**{name: sums[name][j] for name in columns}))
    report.overall.add(MetricCounters(**{name: int(col.sum()) for name, col in columns.items()}))
    return report


def render_tables(report: BacktestReport) -> tuple[str, str]:
    """Day and hour tables as CSV text, each ending with a ``total`` row."""
    header = ",".join(DAY_COLUMNS)
    day_lines = [header]
    for d in sorted(report.by_day):
        day_lines.append(",".join([d.isoformat()] + report.by_day[d].as_row()))
    day_lines.append(",".join(["total"] + _column_totals(report.by_day.values()).as_row()))

    hour_lines = ["hour" + header[len("date"):]]
    for h in range(24):
        hour_lines.append(",".join([str(h)] + report.by_hour.get(h, MetricCounters()).as_row()))
    hour_lines.append(",".join(["total"] + _column_totals(report.by_hour.values()).as_row()))
    return "\n".join(day_lines) + "\n", "\n".join(hour_lines) + "\n"


def _column_totals(rows) -> MetricCounters:
    total = MetricCounters()
    for r in rows:
        total.add(r)
    return total


def summary_dict(report: BacktestReport) -> dict:
    o = report.overall
    counters = asdict(o)
    counters.update(
        volume_on_increase_usd=format_fixed(o.volume_on_increase_cents, 2),
        volume_on_decrease_usd=format_fixed(o.volume_on_decrease_cents, 2),
        pnl_usd=format_fixed(o.pnl_micros, 6),
    )
    return {"overall": counters, "pnl_accounting": PNL_ACCOUNTING, **report.metadata}
