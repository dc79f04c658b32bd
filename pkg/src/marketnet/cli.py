"""Command-line entry point: ``marketnet {analyze,synth,entropy,mst}``."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .depnet import CorrelationMatrix, DistanceMatrix, build_mst, read_matrix_csv, to_distance, tree_to_dot
from .entropy import entropy_rate_lz
from .ingest import IngestError, PanelConfig, load_config, load_prices, parse_year_range
from .pipeline import PipelineError, run_analysis
from .returns import discretize_quartiles, log_returns
from .synth import SynthSpecError, load_spec, spec_returns, write_prices_csv, write_sectors_csv

CONFIG_ENV = "MARKETNET_CONFIG"

log = logging.getLogger("marketnet")


def _config(args) -> PanelConfig:
    path = args.config or os.environ.get(CONFIG_ENV)
    cfg = load_config(path) if path else PanelConfig()
    if args.years is not None:
        cfg.year_range = parse_year_range(args.years)
    if args.states is not None:
        cfg.state_count = args.states
    if args.min_days is not None:
        cfg.min_consecutive_days = args.min_days
    if args.top_k is not None:
        cfg.top_k = args.top_k
    if args.alt_distance:
        cfg.alt_distance = True
    if args.jobs is not None:
        cfg.jobs = args.jobs
    # re-run validation after overrides
    PanelConfig.__post_init__(cfg)
    return cfg


def cmd_analyze(args) -> int:
    cfg = _config(args)
    sectors = args.sectors if args.sectors is not None else cfg.sector_map_path
    manifest = run_analysis(cfg, args.prices, sectors, args.out, write_matrices=args.matrices)
    log.info("wrote %d outputs to %s", len(manifest["outputs"]), args.out)
    return 0


def cmd_synth(args) -> int:
    spec = load_spec(args.spec)
    series, sectors = spec_returns(spec)
    write_prices_csv(args.out, series, spec.start_date, spec.start_price)
    if args.sectors_out:
        write_sectors_csv(args.sectors_out, sectors)
    return 0


def cmd_entropy(args) -> int:
    if args.symbols:
        text = Path(args.symbols).read_text(encoding="utf-8").replace(",", " ")
        symbols = np.array([int(tok) for tok in text.split()], dtype=np.int64)
        est = entropy_rate_lz(symbols)
    else:
        if not args.prices or not args.ticker:
            raise ValueError("give --symbols FILE, or a prices CSV together with --ticker")
        match = [s for s in load_prices(args.prices) if s.ticker == args.ticker]
        if not match:
            raise ValueError(f"ticker {args.ticker!r} not found in {args.prices}")
        sym = discretize_quartiles(log_returns(match[0]), args.states)
        est = entropy_rate_lz(sym, alphabet_size=args.states)
    print(f"entropy_rate_bits={est.value:.12g} n={est.n}")
    return 0


def cmd_mst(args) -> int:
    tickers, entries = read_matrix_csv(args.matrix)
    corr = None
    if args.correlation:
        corr = CorrelationMatrix(tickers, entries)
        dist = to_distance(corr, alt=args.alt_distance)
    else:
        dist = DistanceMatrix(tickers, entries)
    dot = tree_to_dot(build_mst(dist, corr), name=args.name)
    if args.out:
        Path(args.out).write_text(dot, encoding="utf-8")
    else:
        sys.stdout.write(dot)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="marketnet", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="run the full yearly pipeline")
    a.add_argument("prices", help="CSV with header ticker,date,close")
    a.add_argument("--sectors", help="CSV with header ticker,sector")
    a.add_argument("--out", required=True, help="output directory")
    a.add_argument("--config", help=f"key=value config file (default: ${CONFIG_ENV})")
    a.add_argument("--years", help="inclusive range A:B")
    a.add_argument("--states", type=int, help="discretization states (default 4)")
    a.add_argument("--min-days", type=int, help="minimum consecutive trading days (default 1000)")
    a.add_argument("--top-k", type=int, help="size of the most-central subset (default 100)")
    a.add_argument("--alt-distance", action="store_true", help="use sqrt(2(1-rho)) instead of 1-rho^2")
    a.add_argument("--jobs", type=int, help="parallel worker processes over years")
    a.add_argument("--matrices", action="store_true", help="also write correlation/distance CSVs")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("synth", help="generate an ingest-compatible synthetic price CSV")
    s.add_argument("spec", help="JSON synthetic dataset spec")
    s.add_argument("--out", required=True, help="prices CSV to write")
    s.add_argument("--sectors-out", help="also write a sector CSV")
    s.set_defaults(func=cmd_synth)

    e = sub.add_parser("entropy", help="entropy rate of a single series")
    e.add_argument("prices", nargs="?", help="prices CSV")
    e.add_argument("--ticker")
    e.add_argument("--symbols", help="file of whitespace- or comma-separated integer symbols")
    e.add_argument("--states", type=int, default=4)
    e.set_defaults(func=cmd_entropy)

    m = sub.add_parser("mst", help="minimal spanning tree of a matrix CSV as DOT")
    m.add_argument("matrix", help="square CSV with ticker header row and column")
    m.add_argument("--correlation", action="store_true", help="input holds correlations, not distances")
    m.add_argument("--alt-distance", action="store_true")
    m.add_argument("--name", default="mst")
    m.add_argument("--out", help="DOT file (default stdout)")
    m.set_defaults(func=cmd_mst)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except SynthSpecError as exc:
        print(f"marketnet {args.command}: invalid spec field {exc}", file=sys.stderr)
    except (PipelineError, IngestError, ValueError, OSError) as exc:
        print(f"marketnet {args.command}: {exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
