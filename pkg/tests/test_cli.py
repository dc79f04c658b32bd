import datetime as dt
import json
import re

import numpy as np
import pytest

from marketnet.cli import main
from marketnet.depnet import write_matrix_csv

from conftest import weekdays


@pytest.fixture
def block_data(tmp_path):
    spec = tmp_path / "blocks.json"
    spec.write_text(json.dumps({"kind": "block_correlated_gaussian", "n": 600, "seed": 4,
                                "blocks": [[4, 0.7], [3, 0.6]]}))
    prices, sectors = tmp_path / "prices.csv", tmp_path / "sectors.csv"
    assert main(["synth", str(spec), "--out", str(prices), "--sectors-out", str(sectors)]) == 0
    return prices, sectors


def run_analyze(prices, sectors, out, *extra):
    args = ["analyze", str(prices), "--out", str(out), "--min-days", "300", *extra]
    if sectors is not None:
        args += ["--sectors", str(sectors)]
    return main(args)


def test_analyze_outputs(block_data, tmp_path):
    prices, sectors = block_data
    out = tmp_path / "out"
    assert run_analyze(prices, sectors, out, "--matrices") == 0
    years = [2000, 2001, 2002]
    for y in years:
        dot = (out / f"tree_{y}.dot").read_text()
        assert len(re.findall(r" -- ", dot)) == 7 - 1
        assert 'sector="block0"' in dot and "mean_return=" in dot and "rho=" in dot
        assert (out / f"correlation_{y}.csv").exists() and (out / f"distance_{y}.csv").exists()
    header = (out / "stock_metrics.csv").read_text().splitlines()[0]
    assert header == "year,ticker,sector,mean_return,sd_return,entropy_rate_bits,markov_centrality,n_returns"
    assert (out / "centrality.csv").read_text().startswith("year,ticker,sector,markov_centrality\n")
    assert (out / "entropy.csv").read_text().startswith("year,ticker,sector,entropy_rate_bits\n")
    corr = json.loads((out / "correlations.json").read_text())
    assert set(corr) == {"all", "top100", "k"} and corr["k"] == 100
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["years_analyzed"] == years
    assert set(manifest["inputs"]) == {"prices", "sectors"}
    assert len(manifest["inputs"]["prices"]["sha256"]) == 64
    assert set(manifest["stage_seconds"]) >= {"ingest", "depnet", "centrality", "entropy"}


def test_sector_rollup_uses_mapped_labels(block_data, tmp_path):
    prices, sectors = block_data
    out = tmp_path / "out"
    run_analyze(prices, sectors, out, "--years", "2001:2001")
    rows = (out / "sector_summaries.csv").read_text().splitlines()[1:]
    assert [r.split(",")[1] for r in rows] == ["block0", "block1"]
    assert [r.split(",")[-1] for r in rows] == ["4", "3"]


def test_missing_sector_file_warns(block_data, tmp_path, caplog):
    prices, _ = block_data
    out = tmp_path / "out"
    assert run_analyze(prices, tmp_path / "absent.csv", out) == 0
    assert "UNCLASSIFIED" in caplog.text
    rows = (out / "stock_metrics.csv").read_text().splitlines()[1:]
    assert all(r.split(",")[2] == "UNCLASSIFIED" for r in rows)


def test_rerun_and_parallel_are_byte_identical(block_data, tmp_path):
    prices, sectors = block_data
    outs = [tmp_path / "a", tmp_path / "b", tmp_path / "c"]
    run_analyze(prices, sectors, outs[0])
    run_analyze(prices, sectors, outs[1])
    run_analyze(prices, sectors, outs[2], "--jobs", "2")
    names = sorted(p.name for p in outs[0].iterdir() if p.name != "manifest.json")
    for other in outs[1:]:
        for name in names:
            assert (outs[0] / name).read_bytes() == (other / name).read_bytes(), name


def test_config_and_env(block_data, tmp_path, monkeypatch):
    prices, sectors = block_data
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"min_consecutive_days = 300\nyears = 2002:2002\nsector_map = {sectors.name}\ntop_k = 5\n")
    monkeypatch.setenv("MARKETNET_CONFIG", str(cfg))
    out = tmp_path / "out"
    assert main(["analyze", str(prices), "--out", str(out)]) == 0
    assert sorted(p.name for p in out.glob("tree_*.dot")) == ["tree_2002.dot"]
    assert json.loads((out / "correlations.json").read_text())["k"] == 5
    assert "block1" in (out / "stock_metrics.csv").read_text()


def test_sparse_years_are_skipped(tmp_path, caplog):
    days = weekdays(dt.date(2004, 12, 1), 60)
    rng = np.random.default_rng(0)
    lines = ["ticker,date,close"]
    for t in ("A", "B", "C"):
        # B and C stop before 2005 ends; 2005 keeps only A
        use = days if t == "A" else [d for d in days if d.year == 2004]
        closes = 10 * np.exp(np.cumsum(rng.normal(0, 0.01, len(use))))
        lines += [f"{t},{d.isoformat()},{c:.6f}" for d, c in zip(use, closes)]
    (tmp_path / "p.csv").write_text("\n".join(lines) + "\n")
    assert main(["analyze", str(tmp_path / "p.csv"), "--out", str(tmp_path / "o"), "--min-days", "5"]) == 0
    assert "skipping 2005" in caplog.text
    assert [p.name for p in (tmp_path / "o").glob("tree_*.dot")] == ["tree_2004.dot"]


def test_zero_variance_names_stage_and_ticker(tmp_path, capsys):
    days = weekdays(dt.date(2003, 1, 1), 40)
    rng = np.random.default_rng(1)
    lines = ["ticker,date,close"]
    for t in ("A", "B", "FLAT"):
        closes = np.full(40, 5.0) if t == "FLAT" else 10 * np.exp(np.cumsum(rng.normal(0, 0.01, 40)))
        lines += [f"{t},{d.isoformat()},{c:.6f}" for d, c in zip(days, closes)]
    (tmp_path / "p.csv").write_text("\n".join(lines) + "\n")
    assert main(["analyze", str(tmp_path / "p.csv"), "--out", str(tmp_path / "o"), "--min-days", "10"]) == 1
    err = capsys.readouterr().err
    assert "stage=depnet" in err and "year=2003" in err and "ticker=FLAT" in err


def test_bad_prices_exit_1(tmp_path, capsys):
    (tmp_path / "p.csv").write_text("ticker,date,close\nA,2001-01-02,-1\n")
    assert main(["analyze", str(tmp_path / "p.csv"), "--out", str(tmp_path / "o")]) == 1
    assert "row 2" in capsys.readouterr().err


def test_synth_invalid_spec(tmp_path, capsys):
    spec = tmp_path / "bad.json"
    spec.write_text(json.dumps({"kind": "markov_chain", "n": 100, "seed": 1, "transition": [[0.5, 0.6], [0.5, 0.5]]}))
    assert main(["synth", str(spec), "--out", str(tmp_path / "x.csv")]) == 1
    assert "transition" in capsys.readouterr().err


def test_synth_iid_round_trips_through_analyze(tmp_path):
    spec = tmp_path / "iid.json"
    spec.write_text(json.dumps({"kind": "iid_uniform", "n": 1200, "seed": 8, "series": 5}))
    assert main(["synth", str(spec), "--out", str(tmp_path / "p.csv")]) == 0
    assert main(["analyze", str(tmp_path / "p.csv"), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "stock_metrics.csv").read_text().count("\n") > 5


def test_entropy_subcommand(tmp_path, capsys):
    (tmp_path / "sym.txt").write_text("0 1 0 1")
    assert main(["entropy", "--symbols", str(tmp_path / "sym.txt")]) == 0
    out = capsys.readouterr().out
    assert out.strip() == f"entropy_rate_bits={8 / 7:.12g} n=4"

    spec = tmp_path / "m.json"
    spec.write_text(json.dumps({"kind": "markov_chain", "n": 300, "seed": 2,
                                "transition": [[0.9, 0.1], [0.1, 0.9]]}))
    main(["synth", str(spec), "--out", str(tmp_path / "p.csv")])
    assert main(["entropy", str(tmp_path / "p.csv"), "--ticker", "S0"]) == 0
    assert "n=300" in capsys.readouterr().out
    assert main(["entropy", str(tmp_path / "p.csv"), "--ticker", "NOPE"]) == 1


def test_mst_subcommand(tmp_path, capsys):
    d = np.array([[0, 0.2, 0.5], [0.2, 0, 0.4], [0.5, 0.4, 0]])
    write_matrix_csv(tmp_path / "d.csv", ["x", "y", "z"], d)
    assert main(["mst", str(tmp_path / "d.csv")]) == 0
    dot = capsys.readouterr().out
    assert '"x" -- "y" [weight=0.2];' in dot and '"y" -- "z" [weight=0.4];' in dot

    rho = np.array([[1, 0.9, 0.1], [0.9, 1, -0.95], [0.1, -0.95, 1]])
    write_matrix_csv(tmp_path / "c.csv", ["x", "y", "z"], rho)
    assert main(["mst", str(tmp_path / "c.csv"), "--correlation", "--out", str(tmp_path / "t.dot")]) == 0
    dot = (tmp_path / "t.dot").read_text()
    assert '"y" -- "z"' in dot and "rho=-0.95" in dot
