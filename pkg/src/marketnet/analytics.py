"""Sector and market roll-ups of per-stock yearly metrics."""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np


@dataclass(frozen=True)
class StockMetrics:
    year: int
    ticker: str
    sector: str
    mean_return: float
    sd_return: float
    entropy_bits: float
    centrality: float
    n_returns: int = 0


@dataclass(frozen=True)
class SectorSummary:
    year: int
    sector: str
    avg_centrality: float
    agg_centrality: float
    avg_mean_return: float
    avg_sd_return: float
    avg_entropy: float
    member_count: int


@dataclass(frozen=True)
class MarketSummary:
    year: int
    avg_mean_return: float
    w_mean_return: float
    avg_sd: float
    w_sd: float
    avg_entropy: float
    w_entropy: float
    member_count: int


def _avg(xs: list[float]) -> float:
    return math.fsum(xs) / len(xs)


def sector_summaries(metrics: Iterable[StockMetrics], year: int) -> list[SectorSummary]:
    groups: dict[str, list[StockMetrics]] = defaultdict(list)
    for m in metrics:
        if m.year == year:
            groups[m.sector].append(m)
    if not groups:
        raise ValueError(f"no stock metrics for {year}")
    out = []
    for sector in sorted(groups):
        ms = groups[sector]
        count = len(ms)
        avg_c = _avg([m.centrality for m in ms])
        out.append(SectorSummary(
            year=year,
            sector=sector,
            avg_centrality=avg_c,
            # keeps agg == avg * count exact up to one rounding
            agg_centrality=avg_c * count,
            avg_mean_return=_avg([m.mean_return for m in ms]),
            avg_sd_return=_avg([m.sd_return for m in ms]),
            avg_entropy=_avg([m.entropy_bits for m in ms]),
            member_count=count,
        ))
    return out


def weighted_market_mean(values: Mapping[str, float], weights: Mapping[str, float]) -> float:
    """Centrality-weighted mean ``sum(w x) / sum(w)`` over matching tickers."""
    if set(values) != set(weights):
        missing = sorted(set(values) ^ set(weights))
        raise ValueError(f"ticker sets differ: {missing[:5]}")
    if not values:
        raise ValueError("empty input")
    keys = sorted(values)
    w = np.array([weights[k] for k in keys], dtype=float)
    if np.any(~(w > 0)):
        raise ValueError("weights must be positive")
    x = np.array([values[k] for k in keys], dtype=float)
    return math.fsum(w * x) / math.fsum(w)


def market_summary(metrics: Iterable[StockMetrics], year: int) -> MarketSummary:
    ms = [m for m in metrics if m.year == year]
    if not ms:
        raise ValueError(f"no stock metrics for {year}")
    w = {m.ticker: m.centrality for m in ms}

    def both(attr):
        vals = {m.ticker: getattr(m, attr) for m in ms}
        return _avg(list(vals.values())), weighted_market_mean(vals, w)

    avg_r, w_r = both("mean_return")
    avg_sd, w_sd = both("sd_return")
    avg_h, w_h = both("entropy_bits")
    return MarketSummary(year, avg_r, w_r, avg_sd, w_sd, avg_h, w_h, len(ms))


def top_k_by_centrality(metrics: Iterable[StockMetrics], k: int) -> list[StockMetrics]:
    """Highest-centrality stock-year points; ties go to the earlier (year, ticker)."""
    ranked = sorted(metrics, key=lambda m: (-m.centrality, m.year, m.ticker))
    return ranked[:k]


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size:
        raise ValueError("length mismatch")
    if x.size < 3:
        raise ValueError(f"need at least 3 points, got {x.size}")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("metric is constant over the selection")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def metric_correlation(metrics: Iterable[StockMetrics], top_k: int | None = None) -> float:
    """Pearson correlation of entropy against SD of returns over stock-year points.

    With ``top_k`` only the ``top_k`` most central points are used.
    """
    pool = list(metrics)
    if top_k is not None:
        pool = top_k_by_centrality(pool, top_k)
    else:
        # input order must not matter
        pool.sort(key=lambda m: (m.year, m.ticker))
    return pearson([m.entropy_bits for m in pool], [m.sd_return for m in pool])
