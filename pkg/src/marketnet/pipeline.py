"""End-to-end yearly analysis: prices in, trees, metrics and summaries out."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .analytics import StockMetrics, market_summary, metric_correlation, sector_summaries
from .centrality import tree_centrality
from .depnet import DegenerateSeriesError, build_mst, pearson_matrix, to_distance, tree_to_dot, write_matrix_csv
from .entropy import entropy_rate_lz
from .ingest import (
    IngestError,
    PanelConfig,
    YearPanel,
    assign_sectors,
    filter_eligible,
    load_prices,
    load_sector_map,
    observed_years,
    slice_year,
)
from .returns import discretize_quartiles, log_returns, mean, stddev
from .synth import RNG_NAME

log = logging.getLogger(__name__)

MIN_SERIES_PER_YEAR = 3


class PipelineError(RuntimeError):
    def __init__(self, stage: str, message: str, year: int | None = None, ticker: str | None = None):
        self.stage, self.year, self.ticker = stage, year, ticker
        where = [f"stage={stage}"]
        if year is not None:
            where.append(f"year={year}")
        if ticker is not None:
            where.append(f"ticker={ticker}")
        super().__init__(f"[{' '.join(where)}] {message}")


@dataclass
class YearResult:
    year: int
    metrics: list[StockMetrics]
    dot: str
    corr: tuple | None = None
    dist: tuple | None = None
    timings: dict[str, float] = field(default_factory=dict)


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def analyze_year(panel: YearPanel, state_count: int = 4, alt_distance: bool = False,
                 keep_matrices: bool = False) -> YearResult:
    year = panel.year
    timings: dict[str, float] = {}
    t0 = time.perf_counter()

    returns = {}
    for s in panel.series:
        try:
            returns[s.ticker] = log_returns(s)
        except ValueError as exc:
            raise PipelineError("returns", str(exc), year, s.ticker) from exc
    timings["returns"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    try:
        corr = pearson_matrix(list(returns.values()))
    except DegenerateSeriesError as exc:
        raise PipelineError("depnet", str(exc), year, exc.ticker) from exc
    dist = to_distance(corr, alt=alt_distance)
    tree = build_mst(dist, corr)
    timings["depnet"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    scores = tree_centrality(tree)
    timings["centrality"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    metrics = []
    sectors = {s.ticker: s.sector for s in panel.series}
    means = {}
    for ticker, r in returns.items():
        try:
            sym = discretize_quartiles(r, state_count)
            h = entropy_rate_lz(sym, alphabet_size=state_count)
            mu, sd = mean(r), stddev(r)
        except ValueError as exc:
            raise PipelineError("entropy", str(exc), year, ticker) from exc
        means[ticker] = mu
        metrics.append(StockMetrics(year, ticker, sectors[ticker], mu, sd, h.value, scores[ticker], h.n))
    timings["entropy"] = time.perf_counter() - t0

    dot = tree_to_dot(tree, name=f"mst_{year}", sectors=sectors, mean_returns=means)
    result = YearResult(year, metrics, dot, timings=timings)
    if keep_matrices:
        result.corr = (corr.tickers, corr.entries)
        result.dist = (dist.tickers, dist.entries)
    return result


def _write_rows(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _digest(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def run_analysis(cfg: PanelConfig, prices_path, sectors_path, out_dir,
                 write_matrices: bool = False) -> dict:
    """Run every stage and write outputs into ``out_dir``; returns the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stage_times: dict[str, float] = {}

    t0 = time.perf_counter()
    try:
        series = load_prices(prices_path)
    except (OSError, IngestError) as exc:
        raise PipelineError("ingest", f"{prices_path}: {exc}") from exc
    sectors: dict[str, str] = {}
    inputs = {"prices": str(prices_path)}
    if sectors_path is not None and Path(sectors_path).is_file():
        try:
            sectors = load_sector_map(sectors_path)
        except IngestError as exc:
            raise PipelineError("ingest", f"{sectors_path}: {exc}") from exc
        inputs["sectors"] = str(sectors_path)
    else:
        log.warning("sector map %s not found; all tickers are UNCLASSIFIED", sectors_path)
    series = assign_sectors(series, sectors)
    eligible = filter_eligible(series, cfg)
    stage_times["ingest"] = time.perf_counter() - t0
    log.info("%d of %d series eligible (>= %d consecutive days)",
             len(eligible), len(series), cfg.min_consecutive_days)

    years = observed_years(eligible)
    if cfg.year_range is not None:
        lo, hi = cfg.year_range
        years = list(range(lo, hi + 1))

    panels = []
    cardinalities = {}
    for year in years:
        try:
            panel = slice_year(eligible, year)
        except IngestError as exc:
            log.warning("skipping %d: %s", year, exc)
            cardinalities[year] = 0
            continue
        cardinalities[year] = len(panel.series)
        if len(panel.series) < MIN_SERIES_PER_YEAR:
            log.warning("skipping %d: only %d complete series", year, len(panel.series))
            continue
        panels.append(panel)

    args = [(p, cfg.state_count, cfg.alt_distance, write_matrices) for p in panels]
    if cfg.jobs > 1 and len(panels) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_analyze_star, args))
    else:
        results = [analyze_year(*a) for a in args]

    for stage in ("returns", "depnet", "centrality", "entropy"):
        stage_times[stage] = sum(r.timings.get(stage, 0.0) for r in results)

    t0 = time.perf_counter()
    all_metrics: list[StockMetrics] = []
    written = []
    for r in results:
        all_metrics.extend(r.metrics)
        p = out / f"tree_{r.year}.dot"
        p.write_text(r.dot, encoding="utf-8")
        written.append(p)
        if r.corr is not None:
            write_matrix_csv(out / f"correlation_{r.year}.csv", *r.corr)
            write_matrix_csv(out / f"distance_{r.year}.csv", *r.dist)
            written += [out / f"correlation_{r.year}.csv", out / f"distance_{r.year}.csv"]

    _write_rows(out / "stock_metrics.csv",
                ["year", "ticker", "sector", "mean_return", "sd_return", "entropy_rate_bits",
                 "markov_centrality", "n_returns"],
                ((m.year, m.ticker, m.sector, m.mean_return, m.sd_return, m.entropy_bits,
                  m.centrality, m.n_returns) for m in all_metrics))
    _write_rows(out / "centrality.csv", ["year", "ticker", "sector", "markov_centrality"],
                ((m.year, m.ticker, m.sector, m.centrality) for m in all_metrics))
    _write_rows(out / "entropy.csv", ["year", "ticker", "sector", "entropy_rate_bits"],
                ((m.year, m.ticker, m.sector, m.entropy_bits) for m in all_metrics))

    sec_rows, mkt_rows = [], []
    for r in results:
        for s in sector_summaries(r.metrics, r.year):
            sec_rows.append(tuple(asdict(s).values()))
        mkt_rows.append(tuple(asdict(market_summary(r.metrics, r.year)).values()))
    _write_rows(out / "sector_summaries.csv",
                ["year", "sector", "avg_centrality", "agg_centrality", "avg_mean_return",
                 "avg_sd_return", "avg_entropy", "member_count"], sec_rows)
    _write_rows(out / "market_summaries.csv",
                ["year", "avg_mean_return", "w_mean_return", "avg_sd", "w_sd", "avg_entropy",
                 "w_entropy", "member_count"], mkt_rows)
    _write_rows(out / "cardinalities.csv", ["year", "cardinality"], sorted(cardinalities.items()))

    correlations = {"all": _safe_corr(all_metrics, None), f"top{cfg.top_k}": _safe_corr(all_metrics, cfg.top_k),
                    "k": cfg.top_k}
    with open(out / "correlations.json", "w", encoding="utf-8") as fh:
        json.dump(correlations, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written += [out / n for n in ("stock_metrics.csv", "centrality.csv", "entropy.csv",
                                  "sector_summaries.csv", "market_summaries.csv",
                                  "cardinalities.csv", "correlations.json")]
    stage_times["export"] = time.perf_counter() - t0

    config_snapshot = asdict(cfg)
    config_snapshot["sector_map_path"] = str(cfg.sector_map_path) if cfg.sector_map_path else None
    manifest = {
        "tool": "marketnet",
        "version": __version__,
        "rng": RNG_NAME,
        "config": config_snapshot,
        "inputs": {k: {"path": v, "sha256": _digest(Path(v))} for k, v in inputs.items()},
        "years_analyzed": [r.year for r in results],
        "outputs": sorted(p.name for p in written),
        "stage_seconds": {k: round(v, 6) for k, v in stage_times.items()},
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return manifest


def _analyze_star(args):
    return analyze_year(*args)


def _safe_corr(metrics, k):
    try:
        return float(f"{metric_correlation(metrics, k):.12g}")
    except ValueError as exc:
        log.warning("correlation%s undefined: %s", "" if k is None else f" (top {k})", exc)
        return None
