"""Command line entry point: ``backtest``, ``calibrate``, ``quote-stream``, ``synth-bars``."""

from __future__ import annotations

import argparse
import logging
import sys
from datetime import date
from typing import TextIO

import numpy as np

from .backtest import emit_report, run_backtest
from .config import RunConfig, load_config
from .engine import advance, warm_up
from .errors import (
    ConfigError,
    DataError,
    MalformedRow,
    NonMonotonicTimestamp,
    ReportIOError,
    TimestampMismatch,
)
from .market_data import (
    SECONDS_PER_DAY,
    BarSeries,
    format_timestamp,
    parse_minute_bars,
    write_minute_bars,
)
from .simulation import ActivitySeries, ActivityStream, IntervalActivity, calibrate_lognormal, parse_activity
from .synthetic import random_walk_bars

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_IO = 0, 2, 3, 4
QUOTE_HEADER = "timestamp_utc,bid,offer,spread_delta,classification"

log = logging.getLogger("mmspread")


def _config_from_args(args) -> RunConfig:
    try:
        config = load_config(args.config) if args.config else RunConfig()
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {exc.filename}") from None
    for key in ("bars", "activity", "out"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(config, key, value)
    return config.validate()


def cmd_backtest(args) -> int:
    config = _config_from_args(args)
    report = run_backtest(config)
    out = config.out or "report"
    for path in emit_report(report, out):
        print(path)
    o = report.overall
    log.info("intervals=%d increases=%d decreases=%d pnl_usd=%.2f",
             o.intervals_quoted, o.increases, o.decreases, o.pnl_increase)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    params = calibrate_lognormal(args.mean, args.cv)
    print(f"mu = {params.mu:.9f}")
    print(f"sigma = {params.sigma:.9f}")
    print(f"sigma_sq = {params.sigma ** 2:.9f}")
    print(f"implied_mean = {params.mean:.9g}")
    return EXIT_OK


def quote_stream(config: RunConfig, source: TextIO, sink: TextIO) -> int:
    """Warm up on the first ``window_days`` days of ``source``, then quote every bar.

    Returns the number of quotes written.
    """
    calendar = config.calendar()
    supplied: dict[int, IntervalActivity] | None = None
    if config.activity:
        with open(config.activity) as fh:
            act = parse_activity(fh)
        supplied = {int(t): act[i] for i, t in enumerate(act.timestamps.tolist())}
    sim = ActivityStream(calendar, config.simulation_config())

    def activity_for(ts: int) -> IntervalActivity:
        if supplied is None:
            return sim.next(ts)
        try:
            return supplied[ts]
        except KeyError:
            raise TimestampMismatch(f"no activity row for {format_timestamp(ts)}") from None

    lines = iter(source)
    header = next(lines, None)
    if header is None:
        return 0
    buffered: list[tuple] = []
    days_seen: list[int] = []
    state = None
    prev_ts = None
    written = 0
    sink.write(QUOTE_HEADER + "\n")
    for lineno, line in enumerate(lines, start=2):
        if not line.strip():
            continue
        try:
            # the batch parser gives each streamed row identical validation
            bar_series = parse_minute_bars([header, line], config.interval_seconds)
        except MalformedRow as exc:
            raise MalformedRow(lineno, exc.reason) from None
        ts = int(bar_series.timestamps[0])
        if prev_ts is not None and ts <= prev_ts:
            raise NonMonotonicTimestamp(lineno)
        if prev_ts is not None and (ts - prev_ts) % config.interval_seconds:
            raise MalformedRow(lineno, f"spacing not a multiple of {config.interval_seconds}s")
        prev_ts = ts
        activity = activity_for(ts)
        day = ts // SECONDS_PER_DAY
        if state is None:
            if not days_seen or days_seen[-1] != day:
                days_seen.append(day)
            if len(days_seen) <= config.window_days:
                buffered.append((bar_series, activity))
                continue
            state = _warm_from_buffer(buffered, config)
            buffered = []
        quote, snap, state = advance(state, bar_series[0], activity)
        sink.write(f"{format_timestamp(ts)},{quote.bid:.6f},{quote.offer:.6f},"
                   f"{snap.spread_delta:.8f},{snap.classification}\n")
        sink.flush()
        written += 1
    return written


def _warm_from_buffer(buffered, config: RunConfig):
    bars = BarSeries(
        np.concatenate([b.timestamps for b, _ in buffered]),
        np.concatenate([b.open for b, _ in buffered]),
        np.concatenate([b.high for b, _ in buffered]),
        np.concatenate([b.low for b, _ in buffered]),
        np.concatenate([b.close for b, _ in buffered]),
    )
    acts = [a for _, a in buffered]
    activity = ActivitySeries(bars.timestamps, [a.trade_count for a in acts],
                              [a.volume for a in acts], [a.avg_trade_size for a in acts])
    return warm_up(bars, activity, config.engine_config())


def cmd_quote_stream(args) -> int:
    config = _config_from_args(args)
    quote_stream(config, sys.stdin, sys.stdout)
    return EXIT_OK


def cmd_synth_bars(args) -> int:
    bars = random_walk_bars(date.fromisoformat(args.start), args.days,
                            return_std=args.return_std, seed=args.seed)
    if args.output == "-":
        write_minute_bars(bars, sys.stdout)
    else:
        try:
            with open(args.output, "w") as fh:
                write_minute_bars(bars, fh)
        except OSError as exc:
            raise ReportIOError(str(exc)) from exc
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmspread", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    bt = sub.add_parser("backtest", help="warm up, backtest and write reports")
    bt.add_argument("--config", required=True)
    bt.add_argument("--bars")
    bt.add_argument("--activity")
    bt.add_argument("--out")
    bt.set_defaults(func=cmd_backtest)

    cal = sub.add_parser("calibrate", help="lognormal parameters for a target mean and CV")
    cal.add_argument("--mean", type=float, required=True)
    cal.add_argument("--cv", type=float, required=True)
    cal.set_defaults(func=cmd_calibrate)

    qs = sub.add_parser("quote-stream", help="read bars on stdin, write one quote per bar")
    qs.add_argument("--config", required=True)
    qs.set_defaults(func=cmd_quote_stream)

    syn = sub.add_parser("synth-bars", help="write seeded random-walk minute bars")
    syn.add_argument("--start", default="2013-06-12")
    syn.add_argument("--days", type=int, default=97)
    syn.add_argument("--return-std", type=float, default=2e-4)
    syn.add_argument("--seed", type=int, default=7)
    syn.add_argument("--output", default="-")
    syn.set_defaults(func=cmd_synth_bars)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ReportIOError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
