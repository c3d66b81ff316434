"""Tests for geoquant.cli module."""

import json
from io import StringIO
from unittest.mock import patch

import pytest
from rich.console import Console

from geoquant import reports
from geoquant.cli import GeoquantCLI, main
from geoquant.graph import read_gra_file, region_index
from geoquant.ingest import read_raw_file

FAST = ["--iterations", "300", "--burnin", "100", "--thin", "5"]


@pytest.fixture
def cli():
  """CLI writing to an in-memory console."""
  return GeoquantCLI(console=Console(file=StringIO(), width=200))


@pytest.fixture
def scenario_a(cli, tmp_path):
  out = tmp_path / "sim_a"
  assert cli.run(["simulate", "A", "--n", "120", "--seed", "4", "--output", str(out)]) == 0
  return out


@pytest.fixture
def scenario_c(cli, tmp_path):
  out = tmp_path / "sim_c"
  assert cli.run(["simulate", "C", "--grid-side", "4", "--per-region", "5", "--output", str(out)]) == 0
  return out


def _fit(cli, data_dir, out, *extra):
  return cli.run([
    "fit", "--dataset", str(data_dir / "data.raw"), "--response", "y", "--output", str(out),
    *FAST, *extra,
  ])


class TestSimulate:
  def test_scenario_a(self, scenario_a):
    assert (scenario_a / "data.raw").is_file()
    assert not (scenario_a / "graph.gra").exists()
    truth = json.loads((scenario_a / "truth.json").read_text())
    assert truth["label"] == "A" and truth["n"] == 120

  def test_scenario_c_writes_graph(self, scenario_c):
    assert (scenario_c / "graph.gra").read_text().startswith("16\n")

  def test_lower_case_label(self, cli, tmp_path):
    assert cli.run(["simulate", "b", "--n", "200", "--output", str(tmp_path / "b")]) == 0

  def test_files_re_ingest(self, scenario_c):
    dataset, dropped = read_raw_file(scenario_c / "data.raw", region_column="region")
    graph = read_gra_file(scenario_c / "graph.gra")
    assert dropped == 0 and dataset.n == 80
    assert region_index(graph, dataset.regions()).max() == 15

  def test_unknown_scenario(self, cli, tmp_path):
    with patch.object(GeoquantCLI, "show_error") as mock_error:
      assert cli.run(["simulate", "D", "--output", str(tmp_path / "d")]) == 1
      mock_error.assert_called_once()
    assert not (tmp_path / "d").exists()


class TestDescribe:
  def test_writes_tables(self, cli, scenario_a, tmp_path):
    out = tmp_path / "desc"
    code = cli.run([
      "describe", "--dataset", str(scenario_a / "data.raw"), "--response", "y",
      "--linear", "x", "--output", str(out),
    ])
    assert code == 0
    for name in ("descriptives", "correlations", "bands", "band_summary", "band_correlations", "lowess"):
      reports.read_table(out / f"{name}.tsv", name)

    bands = reports.read_table(out / "bands.tsv", "bands")
    assert len(bands) == 120
    assert set(bands["band"]) == {"LOW", "MID", "HIGH"}
    assert len(reports.read_table(out / "lowess.tsv", "lowess")) == 120

  def test_single_variable(self, cli, scenario_a, tmp_path):
    out = tmp_path / "desc"
    assert cli.run(["describe", "--dataset", str(scenario_a / "data.raw"), "--response", "y", "--output", str(out)]) == 0
    assert len(reports.read_table(out / "descriptives.tsv", "descriptives")) == 1
    assert not (out / "correlations.tsv").exists()

  def test_stratified(self, cli, tmp_path):
    data = tmp_path / "data.raw"
    data.write_text("y x group\n" + "".join(f"{i} {i % 7} {i % 2}\n" for i in range(1, 41)))
    out = tmp_path / "desc"
    code = cli.run([
      "describe", "--dataset", str(data), "--response", "y", "--linear", "x",
      "--stratifier", "group", "--output", str(out),
    ])
    assert code == 0
    df = reports.read_table(out / "descriptives.tsv", "descriptives")
    assert "group=0:median" in df.columns and "wilcoxon_p" in df.columns
    assert 0.0 <= df["wilcoxon_p"][0] <= 1.0

  def test_stratifier_must_be_binary(self, cli, tmp_path):
    data = tmp_path / "data.raw"
    data.write_text("y g\n" + "".join(f"{i} {i % 3}\n" for i in range(1, 31)))
    code = cli.run(["describe", "--dataset", str(data), "--response", "y", "--stratifier", "g",
                    "--output", str(tmp_path / "o")])
    assert code == 1

  def test_parse_error(self, cli, tmp_path):
    data = tmp_path / "data.raw"
    data.write_text("y x\n1 2\n3\n")
    with patch.object(GeoquantCLI, "show_error") as mock_error:
      assert cli.run(["describe", "--dataset", str(data), "--response", "y"]) == 1
      assert "line 3" in mock_error.call_args[0][0]

  def test_missing_file(self, cli, tmp_path):
    assert cli.run(["describe", "--dataset", str(tmp_path / "none.raw"), "--response", "y"]) == 1


class TestFit:
  def test_one_directory_per_quantile(self, cli, scenario_a, tmp_path):
    out = tmp_path / "fit"
    assert _fit(cli, scenario_a, out, "--linear", "x", "--quantiles", "0.15,0.5") == 0
    assert sorted(p.name for p in out.iterdir()) == ["q15", "q50"]
    model = json.loads((out / "q50" / "model.json").read_text())
    assert model["mcmc"]["seed"] == 58582
    assert model["standardization"]["columns"] == ["y", "x"]

  def test_outputs_are_reproducible(self, cli, scenario_a, tmp_path):
    _fit(cli, scenario_a, tmp_path / "one", "--linear", "x", "--quantiles", "0.5", "--seed", "9")
    _fit(cli, scenario_a, tmp_path / "two", "--linear", "x", "--quantiles", "0.5", "--seed", "9")
    for name in ("coefficients.tsv", "draws_linear.tsv", "dic.tsv"):
      assert (tmp_path / "one" / "q50" / name).read_bytes() == (tmp_path / "two" / "q50" / name).read_bytes()

  def test_spatial_with_config_file(self, cli, scenario_c, tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({
      "dataset": str(scenario_c / "data.raw"), "graph": str(scenario_c / "graph.gra"),
      "response": "y", "spatial": "region", "quantiles": [0.5],
      "iterations": 300, "burnin": 100, "thin": 5,
    }))
    out = tmp_path / "fit"
    assert cli.run(["fit", "--config", str(config), "--output", str(out)]) == 0
    assert len(reports.read_table(out / "q50" / "spatial.tsv", "spatial")) == 16

  def _fit_with_small_graph(self, cli, data_dir, tmp_path, out, *extra):
    graph = tmp_path / "small.gra"
    graph.write_text("2\n1\n1\n1\n2\n1\n0\n")
    return cli.run([
      "fit", "--dataset", str(data_dir / "data.raw"), "--graph", str(graph),
      "--response", "y", "--spatial", "region", "--output", str(out), *FAST, *extra,
    ])

  def test_failure_leaves_no_result_directories(self, cli, scenario_c, tmp_path):
    out = tmp_path / "fit"
    with patch.object(GeoquantCLI, "show_error") as mock_error:
      assert self._fit_with_small_graph(cli, scenario_c, tmp_path, out) == 1
      assert "absent from the graph" in mock_error.call_args[0][0]
    assert list(out.iterdir()) == []

  def test_failure_keeps_earlier_results(self, cli, scenario_c, tmp_path):
    out = tmp_path / "fit"
    (out / "q50").mkdir(parents=True)
    (out / "q50" / "dic.tsv").write_text("earlier\n")
    assert self._fit_with_small_graph(cli, scenario_c, tmp_path, out, "--quantiles", "0.5") == 1
    assert [p.name for p in out.iterdir()] == ["q50"]
    assert (out / "q50" / "dic.tsv").read_text() == "earlier\n"

  def test_rerun_replaces_whole_directory(self, cli, scenario_a, tmp_path):
    out = tmp_path / "fit"
    (out / "q50").mkdir(parents=True)
    (out / "q50" / "effect_x.tsv").write_text("stale\n")
    assert _fit(cli, scenario_a, out, "--linear", "x", "--quantiles", "0.5") == 0
    assert [p.name for p in out.iterdir()] == ["q50"]
    assert not (out / "q50" / "effect_x.tsv").exists()
    assert reports.read_dic(out / "q50")["quantile"] == 0.5

  def test_unknown_column(self, cli, scenario_a, tmp_path):
    assert _fit(cli, scenario_a, tmp_path / "fit", "--linear", "age") == 1


class TestCompare:
  def test_identical_models(self, cli, scenario_a, tmp_path):
    for name in ("m1", "m2"):
      _fit(cli, scenario_a, tmp_path / name, "--linear", "x")
    out = tmp_path / "cmp"
    assert cli.run(["compare", str(tmp_path / "m1"), str(tmp_path / "m2"), "--output", str(out)]) == 0
    df = reports.read_table(out / "comparison.tsv", "comparison")
    assert len(df) == 3
    assert (df["dic_gap"] == 0.0).all()
    assert (df["preferred"] == "m1").all()
    assert "m2:dic" in df.columns

  def test_mismatched_quantiles(self, cli, scenario_a, tmp_path):
    _fit(cli, scenario_a, tmp_path / "m1", "--quantiles", "0.5")
    _fit(cli, scenario_a, tmp_path / "m2", "--quantiles", "0.85")
    with patch.object(GeoquantCLI, "show_error") as mock_error:
      assert cli.run(["compare", str(tmp_path / "m1"), str(tmp_path / "m2"), "--output", str(tmp_path)]) == 1
      assert "do not match" in mock_error.call_args[0][0]

  def test_needs_two_models(self, cli, tmp_path):
    assert cli.run(["compare", str(tmp_path)]) == 1


class TestShowMessages:
  def test_show_success(self, cli):
    cli.show_success("it worked")

  def test_show_error_with_suggestions(self, cli):
    cli.show_error("it failed", ["try this", "or this"])


class TestMain:
  def test_requires_subcommand(self):
    with pytest.raises(SystemExit):
      main([])

  def test_simulate_through_main(self, tmp_path):
    assert main(["-q", "simulate", "A", "--n", "60", "--output", str(tmp_path / "a")]) == 0
