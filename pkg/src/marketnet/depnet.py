"""Correlation-based dependency networks and their minimal spanning trees."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .returns import ReturnSeries

_CLAMP_SLACK = 1e-12


class DegenerateSeriesError(ValueError):
    """A series with zero variance has no defined correlation."""

    def __init__(self, ticker: str):
        self.ticker = ticker
        super().__init__(f"{ticker}: zero variance, correlation undefined")


@dataclass(frozen=True)
class CorrelationMatrix:
    tickers: tuple[str, ...]
    entries: np.ndarray


@dataclass(frozen=True)
class DistanceMatrix:
    tickers: tuple[str, ...]
    entries: np.ndarray


@dataclass(frozen=True)
class Edge:
    u: str
    v: str
    weight: float
    rho: float | None = None


@dataclass(frozen=True)
class SpanningTree:
    nodes: tuple[str, ...]
    edges: tuple[Edge, ...]

    @property
    def total_weight(self) -> float:
        return math.fsum(e.weight for e in self.edges)

    def degrees(self) -> dict[str, int]:
        deg = dict.fromkeys(self.nodes, 0)
        for e in self.edges:
            deg[e.u] += 1
            deg[e.v] += 1
        return deg


def pearson_matrix(panel: Sequence[ReturnSeries]) -> CorrelationMatrix:
    """Sample Pearson correlations over aligned, equal-length return series."""
    panel = list(panel)
    if len(panel) < 2:
        raise ValueError(f"need at least 2 series, got {len(panel)}")
    lengths = {len(s) for s in panel}
    if len(lengths) != 1:
        raise ValueError(f"series are not aligned: lengths {sorted(lengths)}")
    if lengths.pop() < 2:
        raise ValueError("need at least 2 observations per series")

    x = np.vstack([s.values for s in panel])
    centered = x - x.mean(axis=1, keepdims=True)
    ss = np.einsum("ij,ij->i", centered, centered)
    scale = np.abs(x).max(axis=1)
    for s, var, sc in zip(panel, ss, scale):
        # relative test: a constant series leaves only rounding residue
        if var <= (1e-15 * max(sc, 1e-300)) ** 2 * x.shape[1]:
            raise DegenerateSeriesError(s.ticker)
    norm = centered / np.sqrt(ss)[:, None]
    rho = norm @ norm.T
    bad = np.abs(rho) > 1 + _CLAMP_SLACK
    if bad.any():
        raise FloatingPointError("correlation outside [-1, 1] beyond rounding")
    rho = np.clip(rho, -1.0, 1.0)
    rho = (rho + rho.T) / 2
    np.fill_diagonal(rho, 1.0)
    return CorrelationMatrix(tuple(s.ticker for s in panel), rho)


def to_distance(corr: CorrelationMatrix, alt: bool = False) -> DistanceMatrix:
    """``1 - rho**2`` by default; ``sqrt(2 (1 - rho))`` when ``alt`` is set.

    The default maps perfectly anticorrelated pairs to distance zero.
    """
    rho = corr.entries
    if alt:
        d = np.sqrt(np.maximum(2.0 * (1.0 - rho), 0.0))
    else:
        d = 1.0 - rho**2
    d = np.maximum(d, 0.0)
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix(corr.tickers, d)


class DisjointSet:
    """Union-find with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, a: int) -> int:
        parent = self.parent
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True


def build_mst(dist: DistanceMatrix, corr: CorrelationMatrix | None = None) -> SpanningTree:
    """Kruskal over the complete graph, shortest edges first.

    Equal weights are ordered by ``(min ticker, max ticker)`` so the tree is
    reproducible. When ``corr`` is given each edge also carries its rho.
    """
    names = dist.tickers
    n = len(names)
    if n < 2:
        raise ValueError("a spanning tree needs at least 2 nodes")
    if corr is not None and corr.tickers != names:
        raise ValueError("correlation and distance matrices list different tickers")
    d = dist.entries

    iu, ju = np.triu_indices(n, k=1)
    lo = [min(names[i], names[j]) for i, j in zip(iu, ju)]
    hi = [max(names[i], names[j]) for i, j in zip(iu, ju)]
    order = sorted(range(len(iu)), key=lambda e: (d[iu[e], ju[e]], lo[e], hi[e]))

    dsu = DisjointSet(n)
    edges = []
    for e in order:
        i, j = int(iu[e]), int(ju[e])
        if dsu.union(i, j):
            a, b = (i, j) if names[i] <= names[j] else (j, i)
            rho = float(corr.entries[a, b]) if corr is not None else None
            edges.append(Edge(names[a], names[b], float(d[a, b]), rho))
            if len(edges) == n - 1:
                break
    return SpanningTree(tuple(names), tuple(edges))


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _dot_id(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def tree_to_dot(
    tree: SpanningTree,
    name: str = "mst",
    sectors: Mapping[str, str] | None = None,
    mean_returns: Mapping[str, float] | None = None,
) -> str:
    lines = [f"graph {_dot_id(name)} {{"]
    for node in tree.nodes:
        attrs = []
        if sectors is not None:
            attrs.append(f"sector={_dot_id(sectors.get(node, ''))}")
        if mean_returns is not None and node in mean_returns:
            attrs.append(f"mean_return={_fmt(mean_returns[node])}")
        lines.append(f"  {_dot_id(node)}" + (f" [{', '.join(attrs)}]" if attrs else "") + ";")
    for e in tree.edges:
        attrs = [f"weight={_fmt(e.weight)}"]
        if e.rho is not None:
            attrs.append(f"rho={_fmt(e.rho)}")
        lines.append(f"  {_dot_id(e.u)} -- {_dot_id(e.v)} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_matrix_csv(path, tickers: Sequence[str], entries: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ticker", *tickers])
        for t, row in zip(tickers, entries):
            w.writerow([t, *(_fmt(float(v)) for v in row)])


def read_matrix_csv(path) -> tuple[tuple[str, ...], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ValueError(f"{path}: empty matrix file")
    tickers = tuple(c.strip() for c in rows[0][1:])
    body = rows[1:]
    if len(body) != len(tickers):
        raise ValueError(f"{path}: {len(tickers)} columns but {len(body)} rows")
    entries = np.empty((len(tickers), len(tickers)))
    for i, row in enumerate(body):
        if row[0].strip() != tickers[i]:
            raise ValueError(f"{path}: row {i + 2} label {row[0]!r} does not match column {tickers[i]!r}")
        if len(row) != len(tickers) + 1:
            raise ValueError(f"{path}: row {i + 2} has {len(row) - 1} values")
        entries[i] = [float(v) for v in row[1:]]
    if not np.allclose(entries, entries.T, atol=1e-12):
        raise ValueError(f"{path}: matrix is not symmetric")
    return tickers, entries
