"""Flat ``key = value`` run configuration with exhaustive validation."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .engine import ClampParams, ConsolidationWeights, EngineConfig, SpreadConfig
from .errors import ValidationErrors
from .market_data import SECONDS_PER_DAY, TradingCalendar
from .simulation import SimulationConfig

PATH_KEYS = ("bars", "activity", "out")


@dataclass
class RunConfig:
    alpha: float = 0.9
    beta: float = 0.1
    volatility_mode: str = "absolute"
    w_p: float = 1 / 3
    w_tc: float = 1 / 3
    w_v: float = 1 / 3
    m: float = 2.0
    n: float = 3.0
    base_spread: float = 0.0002
    min_spread: float = 0.00001
    interval_seconds: int = 60
    window_days: int = 30
    seed: int = 20130724
    mean_trades_per_interval: float = 60.0
    target_monthly_volume: float = 300e9
    cv_count: float = 0.5
    cv_size: float = 0.5
    bars: str | None = None
    activity: str | None = None
    out: str | None = None

    def problems(self) -> list[str]:
        """Every violated constraint, in a stable order."""
        p = []
        if not (0 < self.alpha < 1):
            p.append(f"alpha = {self.alpha}: need 0 < alpha < 1")
        if not (0 < self.beta < 1):
            p.append(f"beta = {self.beta}: need 0 < beta < 1")
        if self.alpha + self.beta > 1:
            p.append(f"alpha + beta = {self.alpha + self.beta}: need alpha + beta <= 1")
        if self.volatility_mode not in ("absolute", "signed"):
            p.append(f"volatility_mode = {self.volatility_mode!r}: need 'absolute' or 'signed'")
        weights = (self.w_p, self.w_tc, self.w_v)
        if min(weights) < 0:
            p.append("weights w_p, w_tc, w_v must be non-negative")
        if abs(sum(weights) - 1.0) > 1e-12:
            p.append(f"w_p + w_tc + w_v = {sum(weights)}: weights must sum to 1")
        if not (self.m > 0):
            p.append(f"m = {self.m}: need m > 0")
        if not (self.n > 0):
            p.append(f"n = {self.n}: need n > 0")
        if not (0 < self.min_spread < self.base_spread):
            p.append(f"min_spread = {self.min_spread}, base_spread = {self.base_spread}: "
                     "need 0 < min_spread < base_spread")
        if self.interval_seconds <= 0 or SECONDS_PER_DAY % self.interval_seconds:
            p.append(f"interval_seconds = {self.interval_seconds}: must divide 86400")
        if self.window_days < 1:
            p.append(f"window_days = {self.window_days}: need window_days >= 1")
        if not (0 <= self.seed < 2 ** 64):
            p.append(f"seed = {self.seed}: need an unsigned 64-bit integer")
        for key in ("mean_trades_per_interval", "target_monthly_volume", "cv_count", "cv_size"):
            v = getattr(self, key)
            if not (math.isfinite(v) and v > 0):
                p.append(f"{key} = {v}: need a positive value")
        return p

    def validate(self) -> "RunConfig":
        problems = self.problems()
        if problems:
            raise ValidationErrors(problems)
        return self

    def engine_config(self) -> EngineConfig:
        return EngineConfig(
            alpha=self.alpha, beta=self.beta, volatility_mode=self.volatility_mode,
            weights=ConsolidationWeights(self.w_p, self.w_tc, self.w_v),
            clamp=ClampParams(self.m, self.n),
            spread=SpreadConfig(self.base_spread, self.min_spread),
            window_days=self.window_days,
            calendar=self.calendar(),
        )

    def calendar(self) -> TradingCalendar:
        return TradingCalendar(interval_seconds=self.interval_seconds)

    def simulation_config(self) -> SimulationConfig:
        return SimulationConfig(
            mean_trades_per_interval=self.mean_trades_per_interval,
            target_monthly_volume=self.target_monthly_volume,
            cv_count=self.cv_count, cv_size=self.cv_size, seed=self.seed,
        )

    def echo(self) -> dict:
        """Model parameters for the report (paths excluded so outputs stay relocatable)."""
        return {k: v for k, v in asdict(self).items() if k not in PATH_KEYS}


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key: str, raw: str):
    kind = _TYPES[key]
    if kind == "float":
        return float(raw)
    if kind == "int":
        return int(raw)
    return raw


def parse_config(text: str, base_dir: Path | None = None) -> RunConfig:
    """Parse config text; relative paths resolve against ``base_dir``."""
    values: dict = {}
    problems: list[str] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key:
            problems.append(f"line {lineno}: expected 'key = value'")
            continue
        if key not in _TYPES:
            problems.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in values:
            problems.append(f"line {lineno}: duplicate key {key!r}")
            continue
        try:
            value = _convert(key, raw)
        except ValueError:
            problems.append(f"line {lineno}: {key} = {raw!r} is not a valid {_TYPES[key]}")
            continue
        if key in PATH_KEYS and base_dir is not None:
            value = str((base_dir / value)) if not Path(value).is_absolute() else value
        values[key] = value
    config = RunConfig(**values)
    problems += config.problems()
    if problems:
        raise ValidationErrors(problems)
    return config


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    text = path.read_text()  # FileNotFoundError propagates
    return parse_config(text, base_dir=path.parent)
