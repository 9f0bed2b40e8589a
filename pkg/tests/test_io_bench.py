import json
import warnings

import numpy as np
import pytest

from causalbench.bench import AlgorithmSpec, BenchConfig, ConfigError, parse_grid, run_benchmark
from causalbench.cli import main
from causalbench.graphs import load_graph
from causalbench.io import DataError, Manifest, read_csv, simulate_benchmark_dataset, write_csv
from causalbench.metrics import REPORT_COLUMNS, MetricReport
from causalbench.stats import Dataset


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


# -- CSV ---------------------------------------------------------------------


def test_read_minimal_csv(tmp_path):
    d = read_csv(_write(tmp_path / "a.csv", "x,y\n1,2\n"))
    assert (d.n, d.m) == (1, 2) and d.columns == ("x", "y")


def test_na_cell_names_line_and_column(tmp_path):
    with pytest.raises(DataError, match=r":3: .*'NA'.*'y'"):
        read_csv(_write(tmp_path / "a.csv", "x,y\n1,2\n3,NA\n"))


def test_ragged_row(tmp_path):
    with pytest.raises(DataError, match=":2: expected 2 fields"):
        read_csv(_write(tmp_path / "a.csv", "x,y\n1,2,3\n"))


def test_duplicate_header(tmp_path):
    with pytest.raises(DataError, match="duplicate column 'x'"):
        read_csv(_write(tmp_path / "a.csv", "x,x\n1,2\n"))


def test_empty_and_missing_files(tmp_path):
    with pytest.raises(DataError):
        read_csv(_write(tmp_path / "a.csv", ""))
    with pytest.raises(DataError):
        read_csv(_write(tmp_path / "b.csv", "x,y\n"))
    with pytest.raises(DataError):
        read_csv(tmp_path / "missing.csv")


def test_roundtrip_is_bit_exact(tmp_path):
    x = np.random.default_rng(0).normal(size=(50, 3)) * 10.0 ** np.arange(-5, 10, 5)
    write_csv(Dataset(["a", "b", "c"], x), tmp_path / "r.csv")
    assert np.array_equal(read_csv(tmp_path / "r.csv").values, x)


# -- simulated dataset ---------------------------------------------------------


@pytest.fixture(scope="module")
def simulated(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    return simulate_benchmark_dataset(3, out), out


def test_simulated_manifest_layout(simulated):
    man, out = simulated
    assert len(man.interventions) == 10
    assert read_csv(out / man.observational).n == 10_000
    for e in man.interventions:
        d = read_csv(out / e.path)
        assert d.n == 1000
        assert np.all(d.column(e.node) == e.value)
    assert Manifest.load(out / "manifest.json") == man


def test_manifest_validation(tmp_path):
    _write(tmp_path / "obs.csv", "a,b\n1,2\n")
    _write(tmp_path / "ko.csv", "a,c\n1,2\n")
    doc = {"observational": "obs.csv", "interventions": [{"node": "a", "value": 0, "path": "ko.csv"}]}
    _write(tmp_path / "m.json", json.dumps(doc))
    with pytest.raises(DataError, match="header differs"):
        Manifest.load(tmp_path / "m.json")
    doc["interventions"][0]["path"] = "nope.csv"
    _write(tmp_path / "m.json", json.dumps(doc))
    with pytest.raises(DataError, match="missing file"):
        Manifest.load(tmp_path / "m.json")


def test_seeds_give_different_truths(tmp_path):
    graphs = []
    for s in range(40):
        simulate_benchmark_dataset(s, tmp_path / str(s), n_obs=20, n_int=5)
        graphs.append(load_graph(tmp_path / str(s) / "truth.json"))
    for a, b in zip(graphs[::2], graphs[1::2]):
        assert a != b


# -- config --------------------------------------------------------------------


def test_parse_grid():
    assert parse_grid("0.1:0.1:0.3") == [0.1, 0.2, 0.3]
    assert parse_grid("0.5,0.05") == [0.5, 0.05]
    assert parse_grid({"start": 0.0, "step": 0.5, "end": 1.0}) == [0.0, 0.5, 1.0]
    with pytest.raises(ConfigError):
        parse_grid("a:b:c")


def test_config_validation():
    with pytest.raises(ConfigError):
        BenchConfig(algorithms=[], out="x", seed=1, simulate={})
    with pytest.raises(ConfigError):
        BenchConfig(algorithms=["pc"], out="x", simulate={})  # seed missing
    with pytest.raises(ConfigError):
        BenchConfig(algorithms=["pc"], out="x", seed=1, simulate={}, grid=[1.5])
    with pytest.raises(ConfigError):
        AlgorithmSpec("lingam")
    with pytest.raises(ConfigError):
        BenchConfig.from_dict({"algorithms": ["pc"], "out": "x", "seed": 1, "simulate": {}, "bogus": 1})
    assert AlgorithmSpec("ges").select == "default" and AlgorithmSpec("pc").select == "best_f"


# -- benchmark -----------------------------------------------------------------

SMALL = {"num_nodes": 6, "n_obs": 2000, "n_int": 100}


def _small_config(out, **kw):
    doc = dict(algorithms=["pc", "ges", "fci"], out=str(out), seed=7, simulate=SMALL,
               grid=[0.01, 0.05, 0.2, 0.5])
    doc.update(kw)
    return BenchConfig(**doc)


def test_bench_smoke(tmp_path):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        outcome = run_benchmark(_small_config(tmp_path / "o"))
    assert outcome.exit_code == 0
    out = outcome.out_dir
    for f in ("report.csv", "report.md", "metadata.json", "graphs/pc.json", "graphs/truth.json"):
        assert (out / f).exists()
    rep = MetricReport.from_csv((out / "report.csv").read_text())
    sel = {r["algorithm"]: r for r in rep.selected_rows()}
    assert set(sel) == {"true_graph", "pc", "ges", "fci"}
    for key in ("f_score", "auc", "shd", "sid", "nrmse_av"):
        assert sel["pc"][key] is not None
    assert sel["true_graph"]["shd"] == 0 and sel["true_graph"]["sid"] == 0
    assert (out / "report.csv").read_text().splitlines()[0] == ",".join(REPORT_COLUMNS)
    meta = json.loads((out / "metadata.json").read_text())
    assert meta["seed"] == 7 and "pc" in meta["wall_seconds"]


def test_bench_is_byte_deterministic(tmp_path):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        a = run_benchmark(_small_config(tmp_path / "a"))
        b = run_benchmark(_small_config(tmp_path / "b"))
    assert (a.out_dir / "report.csv").read_bytes() == (b.out_dir / "report.csv").read_bytes()


def test_bench_without_truth_still_reports_nrmse(tmp_path, simulated):
    man, data_dir = simulated
    doc = man.to_json()
    doc.pop("truth")
    (tmp_path / "manifest.json").write_text(json.dumps(doc))
    for e in [doc["observational"], doc.get("counterfactual"), "model.json", "counterfactual_int.csv"] + \
            [i["path"] for i in doc["interventions"]]:
        if e:
            (tmp_path / e).write_bytes((data_dir / e).read_bytes())
    cfg = BenchConfig(algorithms=["pc"], out=str(tmp_path / "o"), manifest=str(tmp_path / "manifest.json"),
                      grid=[0.05], metrics=("structural", "predictive"))
    outcome = run_benchmark(cfg)
    (row,) = outcome.report.selected_rows()
    assert row["f_score"] is None and row["shd"] is None and row["auc"] is None
    assert row["nrmse_av"] is not None


def test_bench_records_timeouts(tmp_path):
    outcome = run_benchmark(_small_config(tmp_path / "o", algorithms=["pc"], timeout=1e-9,
                                          metrics=("structural",)))
    assert outcome.exit_code == 3
    assert [r["status"] for r in outcome.report.rows if r["algorithm"] == "pc"] == ["timeout"]


# -- CLI ---------------------------------------------------------------------


def test_cli_pipeline(tmp_path, capsys):
    data = tmp_path / "data"
    assert main(["simulate", "--seed", "5", "--out", str(data), "--nodes", "5", "--n-obs", "1500",
                 "--n-int", "50"]) == 0
    g = tmp_path / "pc.json"
    assert main(["discover", "--data", str(data / "observational.csv"), "--algo", "pc",
                 "--grid", "0.01:0.04:0.2", "--truth", str(data / "truth.json"), "--out", str(g)]) == 0
    capsys.readouterr()
    assert load_graph(g).n == 5
    assert main(["evaluate", "--graph", str(g), "--truth", str(data / "truth.json"),
                 "--data", str(data / "observational.csv")]) == 0
    scores = json.loads(capsys.readouterr().out)
    assert {"f_score", "shd", "sid", "nrmse_av"} <= set(scores)
    if (data / "counterfactual.json").exists():
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            assert main(["counterfactual", "--query", str(data / "counterfactual.json"),
                         "--graph", str(data / "truth.json")]) == 0
        assert "counterfactual_error" in json.loads(capsys.readouterr().out)


def test_cli_bench_with_config_and_overrides(tmp_path, capsys):
    cfg = {"algorithms": ["pc"], "out": "run", "seed": 1, "simulate": SMALL, "grid": "0.01:0.1:0.31"}
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        code = main(["bench", "--config", str(tmp_path / "cfg.json"), "--algo", "pc", "--algo", "ges",
                     "--metrics", "structural,predictive"])
    assert code == 0
    assert "| pc |" in capsys.readouterr().out
    rep = MetricReport.from_csv((tmp_path / "run" / "report.csv").read_text())
    assert {r["algorithm"] for r in rep.rows} == {"true_graph", "pc", "ges"}


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["bench", "--config", str(tmp_path / "missing.json")]) == 1
    assert main(["bench", "--out", str(tmp_path / "o"), "--metrics", "bogus"]) == 1
    _write(tmp_path / "bad.csv", "x,y\n1,oops\n")
    assert main(["discover", "--data", str(tmp_path / "bad.csv"), "--out", str(tmp_path / "g.json")]) == 2
    assert "bad.csv:2:" in capsys.readouterr().err
