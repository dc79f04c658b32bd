"""Loading and slicing of daily closing-price panels.

Prices come as headered CSV (``ticker,date,close``), sectors as
``ticker,sector``. Eligibility and yearly completeness are judged against the
exchange calendar implied by the union of all observed dates.
"""
from __future__ import annotations

import csv
import datetime as dt
import io
import os
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Mapping

import numpy as np

UNCLASSIFIED = "UNCLASSIFIED"


class IngestError(ValueError):
    """Raised for malformed or inconsistent input tables."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        super().__init__(f"row {row}: {message}" if row is not None else message)


@dataclass(frozen=True)
class PriceSeries:
    ticker: str
    dates: tuple[dt.date, ...]
    closes: np.ndarray
    sector: str = UNCLASSIFIED

    def __post_init__(self):
        closes = np.asarray(self.closes, dtype=float)
        if len(closes) != len(self.dates):
            raise ValueError(f"{self.ticker}: {len(self.dates)} dates but {len(closes)} closes")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise ValueError(f"{self.ticker}: dates must be strictly increasing")
        if np.any(~(closes > 0)):
            raise ValueError(f"{self.ticker}: closes must be positive")
        object.__setattr__(self, "closes", closes)

    def __len__(self):
        return len(self.dates)

    def restrict(self, keep: Iterable[dt.date]) -> "PriceSeries":
        keep = set(keep)
        idx = [i for i, d in enumerate(self.dates) if d in keep]
        return PriceSeries(self.ticker, tuple(self.dates[i] for i in idx), self.closes[idx], self.sector)

    def with_sector(self, sector: str) -> "PriceSeries":
        return PriceSeries(self.ticker, self.dates, self.closes, sector)


@dataclass
class PanelConfig:
    min_consecutive_days: int = 1000
    year_range: tuple[int, int] | None = None
    state_count: int = 4
    sector_map_path: Path | None = None
    top_k: int = 100
    alt_distance: bool = False
    jobs: int = 1

    def __post_init__(self):
        if self.min_consecutive_days < 2:
            raise ValueError("min_consecutive_days must be >= 2")
        if self.state_count < 2:
            raise ValueError("state_count must be >= 2")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.year_range is not None and self.year_range[0] > self.year_range[1]:
            raise ValueError(f"empty year range {self.year_range}")


@dataclass(frozen=True)
class YearPanel:
    year: int
    series: tuple[PriceSeries, ...]
    trading_days: tuple[dt.date, ...] = field(default=())

    @property
    def tickers(self) -> list[str]:
        return [s.ticker for s in self.series]


def _open_text(source) -> IO[str]:
    if isinstance(source, (str, os.PathLike)):
        return open(source, newline="", encoding="utf-8")
    return source


def _rows(source, header: tuple[str, ...]):
    """Yield (row number, fields) skipping the header; row numbers are 1-based file lines."""
    fh = _open_text(source)
    try:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None:
            return
        if tuple(h.strip().lower() for h in first) != header:
            raise IngestError(f"expected header {','.join(header)}, got {','.join(first)}", row=1)
        for lineno, fields in enumerate(reader, start=2):
            if not fields or all(not f.strip() for f in fields):
                continue
            if len(fields) != len(header):
                raise IngestError(f"expected {len(header)} fields, got {len(fields)}", row=lineno)
            yield lineno, [f.strip() for f in fields]
    finally:
        if fh is not source:
            fh.close()


def load_prices(*sources) -> list[PriceSeries]:
    """Read one or more price CSVs into per-ticker series sorted by date.

    Several sources are merged as if concatenated; a ``(ticker, date)`` pair
    seen twice anywhere is an error.
    """
    by_ticker: dict[str, dict[dt.date, float]] = defaultdict(dict)
    for source in sources:
        for lineno, (ticker, date_s, close_s) in _rows(source, ("ticker", "date", "close")):
            if not ticker:
                raise IngestError("empty ticker", row=lineno)
            try:
                day = dt.date.fromisoformat(date_s)
            except ValueError:
                raise IngestError(f"bad date {date_s!r}", row=lineno) from None
            try:
                close = float(close_s)
            except ValueError:
                raise IngestError(f"bad close {close_s!r}", row=lineno) from None
            if not np.isfinite(close) or close <= 0:
                raise IngestError(f"close must be a positive number, got {close_s!r}", row=lineno)
            if day in by_ticker[ticker]:
                raise IngestError(f"duplicate observation for ({ticker}, {day.isoformat()})", row=lineno)
            by_ticker[ticker][day] = close

    out = []
    for ticker in sorted(by_ticker):
        obs = sorted(by_ticker[ticker].items())
        out.append(PriceSeries(ticker, tuple(d for d, _ in obs), np.array([c for _, c in obs])))
    return out


def load_sector_map(source) -> dict[str, str]:
    mapping: dict[str, str] = {}
    for lineno, (ticker, sector) in _rows(source, ("ticker", "sector")):
        if not ticker or not sector:
            raise IngestError("empty ticker or sector", row=lineno)
        if ticker in mapping and mapping[ticker] != sector:
            raise IngestError(f"{ticker} mapped to both {mapping[ticker]!r} and {sector!r}", row=lineno)
        mapping[ticker] = sector
    return mapping


def assign_sectors(series: Iterable[PriceSeries], sectors: Mapping[str, str]) -> list[PriceSeries]:
    return [s.with_sector(sectors.get(s.ticker, UNCLASSIFIED)) for s in series]


def _calendar(series: Iterable[PriceSeries]) -> list[dt.date]:
    days: set[dt.date] = set()
    for s in series:
        days.update(s.dates)
    return sorted(days)


def longest_run(s: PriceSeries, calendar_index: Mapping[dt.date, int]) -> tuple[int, int]:
    """Half-open index range into ``s.dates`` of its longest gap-free stretch.

    Ties go to the earliest stretch.
    """
    if len(s) == 0:
        return 0, 0
    pos = [calendar_index[d] for d in s.dates]
    best = (0, 1)
    start = 0
    for i in range(1, len(pos) + 1):
        if i == len(pos) or pos[i] != pos[i - 1] + 1:
            if i - start > best[1] - best[0]:
                best = (start, i)
            start = i
    return best


def filter_eligible(series: Iterable[PriceSeries], cfg: PanelConfig) -> list[PriceSeries]:
    """Keep series with at least ``cfg.min_consecutive_days`` consecutive trading days.

    Survivors are cut down to that longest run.
    """
    series = list(series)
    index = {d: i for i, d in enumerate(_calendar(series))}
    out = []
    for s in series:
        lo, hi = longest_run(s, index)
        if hi - lo >= cfg.min_consecutive_days:
            if (lo, hi) != (0, len(s)):
                s = PriceSeries(s.ticker, s.dates[lo:hi], s.closes[lo:hi], s.sector)
            out.append(s)
    return out


def slice_year(series: Iterable[PriceSeries], year: int) -> YearPanel:
    """Members are the series observed on every trading day of ``year``."""
    series = list(series)
    days = tuple(d for d in _calendar(series) if d.year == year)
    if not days:
        raise IngestError(f"no trading days observed in {year}")
    wanted = set(days)
    members = []
    for s in series:
        in_year = [d for d in s.dates if d.year == year]
        if len(in_year) == len(days) and wanted.issuperset(in_year):
            members.append(s.restrict(wanted))
    members.sort(key=lambda s: s.ticker)
    return YearPanel(year, tuple(members), days)


def observed_years(series: Iterable[PriceSeries]) -> list[int]:
    return sorted({d.year for s in series for d in s.dates})


def parse_year_range(text: str) -> tuple[int, int]:
    """``"2000:2013"`` or a single ``"2005"``."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            y = int(parts[0])
            return y, y
        if len(parts) == 2:
            return int(parts[0]), int(parts[1])
    except ValueError:
        pass
    raise ValueError(f"bad year range {text!r}; expected A:B")


_CONFIG_KEYS = {"min_consecutive_days", "years", "state_count", "sector_map", "top_k", "alt_distance", "jobs"}


def load_config(source) -> PanelConfig:
    """Read a ``key = value`` config file; ``#`` starts a comment."""
    fh = _open_text(source)
    try:
        text = fh.read()
    finally:
        if fh is not source:
            fh.close()
    base = Path(source).parent if isinstance(source, (str, os.PathLike)) else Path(".")
    values: dict[str, str] = {}
    for lineno, line in enumerate(io.StringIO(text), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise IngestError(f"expected key=value, got {line!r}", row=lineno)
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise IngestError(f"unknown config key {key!r}", row=lineno)
        values[key] = value

    kwargs = {}
    for key in ("min_consecutive_days", "state_count", "top_k", "jobs"):
        if key in values:
            kwargs[key] = int(values[key])
    if "years" in values:
        kwargs["year_range"] = parse_year_range(values["years"])
    if "sector_map" in values:
        path = Path(values["sector_map"])
        kwargs["sector_map_path"] = path if path.is_absolute() else base / path
    if "alt_distance" in values:
        kwargs["alt_distance"] = values["alt_distance"].lower() in ("1", "true", "yes", "on")
    return PanelConfig(**kwargs)
