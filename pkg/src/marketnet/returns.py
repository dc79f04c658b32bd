"""Log returns, their first two moments, and equal-population discretization."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ingest import PriceSeries


@dataclass(frozen=True)
class ReturnSeries:
    ticker: str
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(values)):
            raise ValueError(f"{self.ticker}: non-finite log return")
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class DiscreteSeries:
    ticker: str
    symbols: np.ndarray
    state_count: int

    def __len__(self):
        return len(self.symbols)


def _values(returns) -> np.ndarray:
    if isinstance(returns, ReturnSeries):
        return returns.values
    return np.asarray(returns, dtype=float)


def log_returns(prices: PriceSeries) -> ReturnSeries:
    """ln(close[t+1] / close[t]) for consecutive observations."""
    closes = prices.closes
    if len(closes) < 2:
        raise ValueError(f"{prices.ticker}: need at least 2 closes for a return, got {len(closes)}")
    return ReturnSeries(prices.ticker, np.log(closes[1:] / closes[:-1]))


def mean(returns) -> float:
    x = _values(returns)
    if x.size == 0:
        raise ValueError("mean of an empty series")
    return float(math.fsum(x) / x.size)


def stddev(returns) -> float:
    """Sample standard deviation (divisor n - 1)."""
    x = _values(returns)
    if x.size < 2:
        raise ValueError(f"stddev needs at least 2 values, got {x.size}")
    mu = math.fsum(x) / x.size
    return math.sqrt(math.fsum((x - mu) ** 2) / (x.size - 1))


def discretize_quartiles(returns, state_count: int = 4) -> DiscreteSeries:
    """Map returns onto ``state_count`` equal-population states by rank.

    Values are ranked with a stable sort, so tied values keep their time order
    and the earlier ones land in the lower state. Rank ``r`` of ``n`` goes to
    state ``floor(r * state_count / n)``; populations therefore differ by at
    most one whatever the ties.
    """
    x = _values(returns)
    ticker = returns.ticker if isinstance(returns, ReturnSeries) else ""
    if state_count < 2:
        raise ValueError(f"state_count must be >= 2, got {state_count}")
    n = x.size
    if n < state_count:
        raise ValueError(f"{ticker or 'series'}: {n} values cannot fill {state_count} states")
    order = np.argsort(x, kind="stable")
    ranks = np.empty(n, dtype=np.int64)
    ranks[order] = np.arange(n)
    symbols = ranks * state_count // n
    return DiscreteSeries(ticker, symbols, state_count)
