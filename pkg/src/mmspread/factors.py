"""Price, trade-count and volume factors.

The price factor is the conditional volatility from the lagged recursion
``sigma_t = alpha * sigma_{t-1} + beta * eps``; the activity factors are
log-ratios against rolling averages, scaled by gamma into price-factor units.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

from .errors import (
    EmptyWindow,
    InsufficientData,
    NonPositiveAverage,
    NonPositiveVolume,
    ZeroGamma,
)
from .market_data import ln_array
from .rolling import RollingWindow

VolatilityMode = Literal["absolute", "signed"]


@dataclass(frozen=True)
class VolatilityState:
    sigma: float
    alpha: float = 0.9
    beta: float = 0.1
    mode: VolatilityMode = "absolute"

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0 and 0.0 < self.beta < 1.0):
            raise ValueError("need 0 < alpha < 1 and 0 < beta < 1")
        if self.alpha + self.beta > 1.0:
            raise ValueError("need alpha + beta <= 1")
        if self.mode not in ("absolute", "signed"):
            raise ValueError(f"unknown volatility mode {self.mode!r}")


@dataclass(frozen=True)
class FactorValues:
    price_factor: float
    trade_count_factor: float
    volume_factor: float


def init_volatility(returns: Sequence[float]) -> float:
    """Sample standard deviation of the warmup innovations."""
    returns = list(returns)
    n = len(returns)
    if n < 2:
        raise InsufficientData("need at least 2 returns to initialise volatility")
    mean = math.fsum(returns) / n
    return math.sqrt(math.fsum((r - mean) ** 2 for r in returns) / (n - 1))


def update_volatility(state: VolatilityState, epsilon: float) -> VolatilityState:
    """Advance the recursion one interval; the new sigma is that interval's price factor."""
    return replace(state, sigma=_next_sigma(state, state.sigma, epsilon))


def _next_sigma(state: VolatilityState, sigma: float, epsilon: float) -> float:
    shock = abs(epsilon) if state.mode == "absolute" else epsilon
    if state.alpha + state.beta == 1.0:
        # convex form: same value in exact arithmetic, and sigma is an exact
        # fixed point when the shock equals it
        nxt = sigma + state.beta * (shock - sigma)
    else:
        nxt = state.alpha * sigma + state.beta * shock
    return nxt if state.mode == "absolute" else max(0.0, nxt)


def volatility_path(state: VolatilityState, innovations: np.ndarray) -> np.ndarray:
    """Sigma after each innovation, equal bit-for-bit to repeated ``update_volatility``."""
    eps = np.asarray(innovations, dtype=np.float64)
    shocks = (np.abs(eps) if state.mode == "absolute" else eps).tolist()
    a, b, sigma = state.alpha, state.beta, state.sigma
    out = []
    append = out.append
    # same arithmetic as _next_sigma, with the branches hoisted out of the loop
    if state.mode == "absolute" and a + b == 1.0:
        for x in shocks:
            sigma = sigma + b * (x - sigma)
            append(sigma)
    elif state.mode == "absolute":
        for x in shocks:
            sigma = a * sigma + b * x
            append(sigma)
    else:
        convex = a + b == 1.0
        for x in shocks:
            sigma = max(0.0, sigma + b * (x - sigma) if convex else a * sigma + b * x)
            append(sigma)
    return np.array(out, dtype=np.float64)


def _check_gamma(gamma: float) -> None:
    # gamma == 0 only arises from a perfectly flat price history; it disables
    # the activity factors rather than aborting
    if not (gamma >= 0.0):
        raise ValueError(f"gamma must be non-negative, got {gamma!r}")


def trade_count_factor(tc_i: float, tc_avg: float, gamma: float) -> float:
    if not (tc_avg > 0.0):
        raise NonPositiveAverage(f"trade count average must be > 0, got {tc_avg!r}")
    if not (tc_i >= 1):
        raise ValueError(f"trade count must be >= 1, got {tc_i!r}")
    _check_gamma(gamma)
    return math.log(tc_i / tc_avg) * gamma


def volume_factor(v_i: float, v_avg: float, gamma: float) -> float:
    if not (v_avg > 0.0):
        raise NonPositiveAverage(f"volume average must be > 0, got {v_avg!r}")
    if not (v_i > 0.0):
        raise NonPositiveVolume(f"interval volume must be > 0, got {v_i!r}")
    _check_gamma(gamma)
    return math.log(v_i / v_avg) * gamma


def log_ratio_factors(values: np.ndarray, average: float, gamma: float) -> np.ndarray:
    """Vectorised ``trade_count_factor`` / ``volume_factor`` for positive ``values``."""
    if not (average > 0.0):
        raise NonPositiveAverage(f"rolling average must be > 0, got {average!r}")
    _check_gamma(gamma)
    return ln_array(np.asarray(values, dtype=np.float64) / average) * gamma


def update_gamma(price_factors: Sequence[float] | RollingWindow) -> float:
    """Grand mean of the price factor over the window.

    Accepts raw values or a ``RollingWindow`` of daily aggregates; either way
    every interval carries equal weight.
    """
    if isinstance(price_factors, RollingWindow):
        count = sum(d.interval_count for d in price_factors.days)
        if count == 0:
            raise EmptyWindow("no price factors to average")
        gamma = math.fsum(d.sum_price_factor for d in price_factors.days) / count
    else:
        values = list(price_factors)
        if not values:
            raise EmptyWindow("no price factors to average")
        gamma = math.fsum(values) / len(values)
    if gamma <= 0.0:
        raise ZeroGamma("price factor window is all zero")
    return gamma
