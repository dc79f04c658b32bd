"""Synthetic series with known structure, used as test oracles.

All draws use numpy's ``PCG64`` bit generator seeded explicitly; that
generator name is recorded in run manifests.
"""
from __future__ import annotations

import csv
import datetime as dt
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .returns import DiscreteSeries, ReturnSeries

RNG_NAME = "numpy.random.PCG64"
KINDS = ("iid_uniform", "markov_chain", "block_correlated_gaussian")


class SynthSpecError(ValueError):
    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def gen_iid(n: int, k: int, seed: int) -> DiscreteSeries:
    if n < 1:
        raise ValueError("n must be >= 1")
    if k < 2:
        raise ValueError("k must be >= 2")
    return DiscreteSeries("iid", rng_for(seed).integers(0, k, size=n), k)


def _check_transition(P) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] < 2:
        raise ValueError("transition matrix must be square with at least 2 states")
    if np.any(P < 0) or not np.allclose(P.sum(axis=1), 1.0, atol=1e-12):
        raise ValueError("transition matrix rows must be non-negative and sum to 1")
    n_comp, _ = connected_components(P > 0, directed=True, connection="strong")
    if n_comp != 1:
        raise ValueError("transition matrix is reducible")
    return P


def chain_stationary(P) -> np.ndarray:
    P = _check_transition(P)
    k = P.shape[0]
    # pi (I - P) = 0 with sum(pi) = 1
    A = np.vstack([(np.eye(k) - P).T, np.ones(k)])
    b = np.zeros(k + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    return pi


def chain_entropy_rate(P) -> float:
    """``-sum_i pi_i sum_j P_ij log2 P_ij`` in bits."""
    P = _check_transition(P)
    pi = chain_stationary(P)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(P > 0, P * np.log2(P), 0.0)
    return float(-(pi @ terms.sum(axis=1)))


def gen_markov(P, n: int, seed: int) -> tuple[DiscreteSeries, float]:
    """Sample ``n`` states started from the stationary distribution."""
    P = _check_transition(P)
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = rng_for(seed)
    pi = chain_stationary(P)
    cum = np.cumsum(P, axis=1)
    cum[:, -1] = 1.0
    u = rng.random(n)
    x = np.empty(n, dtype=np.int64)
    x[0] = min(int(np.searchsorted(np.cumsum(pi), u[0], side="right")), len(pi) - 1)
    for t in range(1, n):
        x[t] = np.searchsorted(cum[x[t - 1]], u[t], side="right")
    return DiscreteSeries("markov", x, P.shape[0]), chain_entropy_rate(P)


def gen_correlated_returns(
    blocks: Sequence[tuple[int, float]],
    n: int,
    seed: int,
    scale: float = 1.0,
) -> list[ReturnSeries]:
    """Gaussian series equicorrelated at ``rho`` inside each block, independent across blocks.

    Each member is ``sqrt(rho) * f_block + sqrt(1 - rho) * eps``. Tickers are
    ``B{block}S{member}``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    for b, (size, rho) in enumerate(blocks):
        if size < 1:
            raise ValueError(f"block {b}: size must be >= 1")
        if not 0.0 <= rho < 1.0:
            raise ValueError(f"block {b}: intra_rho must be in [0, 1), got {rho}")
    rng = rng_for(seed)
    out = []
    for b, (size, rho) in enumerate(blocks):
        factor = rng.standard_normal(n)
        noise = rng.standard_normal((size, n))
        x = math.sqrt(rho) * factor + math.sqrt(1.0 - rho) * noise
        for s in range(size):
            out.append(ReturnSeries(f"B{b}S{s}", scale * x[s]))
    return out


# --- spec files and CSV emission -------------------------------------------


@dataclass
class SynthSpec:
    kind: str
    n: int
    seed: int
    k: int = 4
    transition: list[list[float]] | None = None
    blocks: list[tuple[int, float]] = field(default_factory=list)
    series: int = 1
    start_date: str = "2000-01-03"
    start_price: float = 100.0
    return_scale: float = 0.01

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise SynthSpecError(sorted(unknown)[0], "unknown field")
        for req in ("kind", "n", "seed"):
            if req not in d:
                raise SynthSpecError(req, "required")
        spec = cls(**d)
        spec.validate()
        return spec

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise SynthSpecError("kind", f"must be one of {', '.join(KINDS)}")
        if not isinstance(self.n, int) or self.n < 2:
            raise SynthSpecError("n", "must be an integer >= 2")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise SynthSpecError("seed", "must be a 64-bit non-negative integer")
        if not isinstance(self.series, int) or self.series < 1:
            raise SynthSpecError("series", "must be an integer >= 1")
        if not self.start_price > 0:
            raise SynthSpecError("start_price", "must be positive")
        try:
            dt.date.fromisoformat(self.start_date)
        except (TypeError, ValueError):
            raise SynthSpecError("start_date", "must be YYYY-MM-DD") from None
        if self.kind == "iid_uniform" and self.k < 2:
            raise SynthSpecError("k", "must be >= 2")
        if self.kind == "markov_chain":
            if self.transition is None:
                raise SynthSpecError("transition", "required for markov_chain")
            try:
                _check_transition(self.transition)
            except ValueError as exc:
                raise SynthSpecError("transition", str(exc)) from None
        if self.kind == "block_correlated_gaussian":
            if not self.blocks:
                raise SynthSpecError("blocks", "required for block_correlated_gaussian")
            for i, blk in enumerate(self.blocks):
                if len(blk) != 2:
                    raise SynthSpecError(f"blocks[{i}]", "expected [size, intra_rho]")
                size, rho = blk
                if not isinstance(size, int) or size < 1:
                    raise SynthSpecError(f"blocks[{i}]", "size must be an integer >= 1")
                if not 0.0 <= rho < 1.0:
                    raise SynthSpecError(f"blocks[{i}]", "intra_rho must be in [0, 1)")


def load_spec(path) -> SynthSpec:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SynthSpecError("<file>", f"invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise SynthSpecError("<file>", "expected a JSON object")
    return SynthSpec.from_dict(data)


def business_days(start: dt.date, count: int) -> list[dt.date]:
    days = []
    d = start
    while len(days) < count:
        if d.weekday() < 5:
            days.append(d)
        d += dt.timedelta(days=1)
    return days


def spec_returns(spec: SynthSpec) -> tuple[list[ReturnSeries], dict[str, str]]:
    """Return series (length ``spec.n``) plus ticker -> sector labels."""
    spec.validate()
    if spec.kind == "block_correlated_gaussian":
        series = gen_correlated_returns([tuple(b) for b in spec.blocks], spec.n, spec.seed, spec.return_scale)
        sectors = {s.ticker: f"block{s.ticker[1:s.ticker.index('S')]}" for s in series}
        return series, sectors

    series = []
    for j in range(spec.series):
        seed = spec.seed + j
        if spec.kind == "iid_uniform":
            sym = gen_iid(spec.n, spec.k, seed)
        else:
            sym, _ = gen_markov(spec.transition, spec.n, seed)
        centre = (sym.state_count - 1) / 2
        values = spec.return_scale * (sym.symbols - centre)
        series.append(ReturnSeries(f"S{j}", values))
    return series, {s.ticker: spec.kind for s in series}


def write_prices_csv(path, series: Sequence[ReturnSeries], start_date: str, start_price: float) -> None:
    """Integrate returns into closes and write ``ticker,date,close`` rows."""
    n = len(series[0])
    days = business_days(dt.date.fromisoformat(start_date), n + 1)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ticker", "date", "close"])
        for s in series:
            closes = start_price * np.exp(np.concatenate([[0.0], np.cumsum(s.values)]))
            for d, c in zip(days, closes):
                w.writerow([s.ticker, d.isoformat(), f"{c:.12g}"])


def write_sectors_csv(path, sectors: dict[str, str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ticker", "sector"])
        for t in sorted(sectors):
            w.writerow([t, sectors[t]])
