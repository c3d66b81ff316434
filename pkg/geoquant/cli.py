"""
CLI layer for geoquant using argparse and the Rich library.

Subcommands: describe, fit, compare and simulate.
"""

import argparse
import json
import logging
import shutil
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from rich import box
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from geoquant import descriptive, posterior, reports, synth
from geoquant.config import RunConfig, build_run_config, default_output_root, load_config_file
from geoquant.engine import fit
from geoquant.graph import RegionGraph, read_gra_file, write_gra_file
from geoquant.ingest import Band, quantile_bands, read_raw_file, standardize, write_raw_file
from geoquant.models import Dataset, GeoquantError, ValidationError, quantile_label

logger = logging.getLogger(__name__)

SCENARIOS = ("A", "B", "C")


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
  """Route library logging through a Rich handler on stderr."""
  level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
  handler = RichHandler(console=Console(stderr=True), show_path=False)
  logging.basicConfig(level=level, format="%(message)s", handlers=[handler], force=True)


def _fit_quantile(dataset: Dataset, graph: Optional[RegionGraph], config: RunConfig,
                  report, index: int, tau: float, directory: Path) -> tuple[float, posterior.DicComponents]:
  """Fit one quantile and write its result set into `directory`. Runs in worker processes too."""
  spec = config.model_spec(tau, seed_offset=index)
  result = fit(dataset, graph, spec, report)
  for path in reports.write_fit_outputs(result, directory):
    if path.suffix == ".tsv":
      reports.read_table(path)
  return tau, result.dic


class GeoquantCLI:
  """Rich-based command-line interface for geoquant."""

  def __init__(self, console: Optional[Console] = None):
    self.console = console or Console()

  def show_success(self, message: str) -> None:
    """Display a success message."""
    self.console.print(f"[green]{message}[/]")

  def show_error(self, message: str, suggestions: Optional[list[str]] = None) -> None:
    """Display an error message with optional suggestions."""
    self.console.print(f"[red]{message}[/]")
    if suggestions:
      for suggestion in suggestions:
        self.console.print(f"  [dim]{suggestion}[/]")

  def build_parser(self) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
      prog="geoquant",
      description="Bayesian geoadditive quantile regression and descriptive analysis",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="warnings only")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, helptext in (("describe", "descriptive statistics"), ("fit", "fit quantile regressions")):
      p = sub.add_parser(name, help=helptext)
      p.add_argument("--config", type=Path, help="JSON config file")
      p.add_argument("--dataset", type=Path)
      p.add_argument("--graph", type=Path)
      p.add_argument("--response")
      p.add_argument("--linear", help="comma-separated linear terms")
      p.add_argument("--smooth", help="comma-separated P-spline terms")
      p.add_argument("--spatial", help="region column for the spatial effect")
      p.add_argument("--n-basis", dest="n_basis", type=int)
      p.add_argument("--quantiles", help="comma-separated quantiles")
      p.add_argument("--iterations", type=int)
      p.add_argument("--burnin", type=int)
      p.add_argument("--thin", type=int)
      p.add_argument("--seed", type=int)
      p.add_argument("--output", type=Path)
      p.add_argument("--no-standardize", dest="standardize", action="store_const", const=False)
      p.add_argument("--stratifier", help="binary column splitting the descriptive tables")
      p.add_argument("--covariate", help="covariate related to the response bands")
      p.add_argument("--jobs", type=int, help="parallel per-quantile fits")

    p = sub.add_parser("compare", help="compare DIC across fitted models")
    p.add_argument("models", nargs="+", type=Path, help="result directories of fit runs")
    p.add_argument("--output", type=Path)

    p = sub.add_parser("simulate", help="write a synthetic scenario")
    p.add_argument("scenario", help="A (linear), B (smooth) or C (spatial)")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--seed", type=int, default=58581)
    p.add_argument("--grid-side", dest="grid_side", type=int, default=8)
    p.add_argument("--per-region", dest="per_region", type=int, default=10)
    p.add_argument("--output", type=Path)
    return parser

  def run(self, argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, dispatch the subcommand and return the exit code."""
    args = self.build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)

    handlers = {
      "describe": self.cmd_describe,
      "fit": self.cmd_fit,
      "compare": self.cmd_compare,
      "simulate": self.cmd_simulate,
    }
    try:
      return handlers[args.command](args)
    except ValidationError as e:
      self.show_error(f"Invalid {e.field}: {e.message}")
    except GeoquantError as e:
      self.show_error(str(e))
    except OSError as e:
      self.show_error(f"Cannot access file: {e}", ["Check the paths given on the command line"])
    return 1

  def _run_config(self, args: argparse.Namespace) -> RunConfig:
    file_values = load_config_file(args.config) if args.config else {}
    keys = (
      "dataset", "graph", "response", "linear", "smooth", "spatial", "n_basis", "quantiles",
      "iterations", "burnin", "thin", "seed", "output", "standardize", "stratifier",
      "covariate", "jobs",
    )
    return build_run_config(file_values, {key: getattr(args, key) for key in keys})

  def _load(self, config: RunConfig) -> tuple[Dataset, Optional[RegionGraph]]:
    dataset, dropped = read_raw_file(config.dataset, region_column=config.spatial)
    if dropped:
      self.console.print(f"[yellow]Dropped {dropped} incomplete row(s)[/]")
    graph = read_gra_file(config.graph) if config.graph is not None else None
    for name in config.variables:
      dataset.column(name)
    return dataset, graph

  def cmd_describe(self, args: argparse.Namespace) -> int:
    """Write medians with quartiles, rank correlations, response bands and per-band LOWESS curves."""
    config = self._run_config(args)
    dataset, _ = self._load(config)
    out = config.output
    out.mkdir(parents=True, exist_ok=True)
    variables = list(config.variables)

    strata = None
    labels: list[float] = []
    if config.stratifier is not None:
      strata = dataset.column(config.stratifier)
      labels = [float(v) for v in np.unique(strata)]
      if len(labels) != 2:
        raise ValidationError(config.stratifier, "Stratifier must take exactly two values")

    columns = ["variable", "median", "q25", "q75"]
    for label in labels:
      tag = f"{config.stratifier}={reports.format_cell(label)}"
      columns += [f"{tag}:median", f"{tag}:q25", f"{tag}:q75"]
    if labels:
      columns.append("wilcoxon_p")

    rows = []
    for name in variables:
      values = dataset.column(name)
      row: list = [name, *descriptive.median_iqr(values)]
      if labels:
        groups = [values[strata == label] for label in labels]
        for group in groups:
          row += list(descriptive.median_iqr(group))
        row.append(descriptive.wilcoxon_rank_sum(groups[0], groups[1]).p_value)
      rows.append(row)
    table = reports.frame(columns, rows)
    reports.write_table(out / "descriptives.tsv", "descriptives", table)
    self.display_rows("Descriptive statistics", table)

    if len(variables) > 1:
      rho, p = descriptive.correlation_matrix(dataset, variables)
      matrix_rows = [
        [name, *(rho[i, j] if j >= i else p[i, j] for j in range(len(variables)))]
        for i, name in enumerate(variables)
      ]
      reports.write_table(
        out / "correlations.tsv", "correlations", reports.frame(["variable", *variables], matrix_rows)
      )

    response = dataset.column(config.response)
    bands = quantile_bands(response)
    reports.write_table(out / "bands.tsv", "bands", pd.DataFrame({
      "row": np.arange(1, dataset.n + 1), config.response: response, "band": [b.value for b in bands],
    }))

    covariate = config.covariate or next(iter((*config.smooth, *config.linear)), None)
    if covariate is not None:
      self._describe_covariate(dataset, config, covariate, bands, strata)

    self.show_success(f"Descriptive tables written to {out}")
    return 0

  def _describe_covariate(self, dataset: Dataset, config: RunConfig, covariate: str,
                          bands: list[Band], strata) -> None:
    out = config.output
    x = dataset.column(covariate)
    y = dataset.column(config.response)
    band_array = np.asarray(bands, dtype=object)

    reports.write_band_summary(out / "band_summary.tsv", descriptive.band_summary(x, bands, strata))

    correlations = descriptive.band_correlations(y, x, bands)
    reports.write_table(out / "band_correlations.tsv", "band_correlations", reports.frame(
      ("band", "count", "rho", "p"),
      [
        (band, int(np.sum(band_array == band)), *(correlations[band] or (None, None)))
        for band in Band
      ],
    ))

    rows = []
    for band in Band:
      idx = np.flatnonzero(band_array == band)
      if idx.size == 0:
        continue
      order = idx[np.argsort(x[idx], kind="stable")]
      fitted = descriptive.lowess(x[order], y[order]) if order.size >= 2 else [None] * order.size
      rows += [(band, i + 1, x[i], y[i], f) for i, f in zip(order, fitted)]
    reports.write_table(
      out / "lowess.tsv", "lowess", reports.frame(("band", "row", covariate, config.response, "fitted"), rows)
    )

  def cmd_fit(self, args: argparse.Namespace) -> int:
    """Fit every requested quantile and write one result directory per quantile."""
    config = self._run_config(args)
    dataset, graph = self._load(config)

    report = None
    if config.standardize:
      dataset, report = standardize(dataset, config.variables)

    config.output.mkdir(parents=True, exist_ok=True)
    labels = [quantile_label(tau) for tau in config.quantiles]
    staging = [Path(tempfile.mkdtemp(prefix=f".{label}-", dir=config.output)) for label in labels]

    jobs = [(dataset, graph, config, report, i, tau, staging[i]) for i, tau in enumerate(config.quantiles)]
    try:
      if config.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(config.jobs, len(jobs))) as pool:
          results = list(pool.map(_fit_quantile, *zip(*jobs)))
      else:
        results = [_fit_quantile(*job) for job in jobs]
    except BaseException:
      for directory in staging:
        shutil.rmtree(directory, ignore_errors=True)
      raise

    # results replace a quantile directory only once every quantile has succeeded
    targets = [config.output / label for label in labels]
    for directory, target in zip(staging, targets):
      if target.exists():
        shutil.rmtree(target)
      directory.rename(target)

    table = Table(title="Model fit", box=box.ROUNDED)
    for column in ("Quantile", "Directory", "Mean deviance", "pD", "DIC"):
      table.add_column(column)
    for (tau, d), target in zip(results, targets):
      table.add_row(
        reports.format_cell(tau), str(target), f"{d.mean_deviance:.3f}", f"{d.pd:.3f}", f"{d.dic:.3f}"
      )
    self.console.print(table)
    self.show_success(f"Results for {len(results)} quantile(s) written to {config.output}")
    return 0

  def cmd_compare(self, args: argparse.Namespace) -> int:
    """Deviance and DIC per quantile for each model directory; flags the lowest DIC."""
    if len(args.models) < 2:
      raise ValidationError("models", "At least two result directories are needed")

    names = [path.name or str(path) for path in args.models]
    if len(set(names)) != len(names):
      names = [f"model{i + 1}" for i in range(len(names))]

    results = []
    for path in args.models:
      subdirs = sorted(d for d in path.iterdir() if (d / "dic.tsv").is_file())
      if not subdirs:
        raise ValidationError("models", f"No result sets found in {path}")
      by_quantile = {}
      for d in subdirs:
        values = reports.read_dic(d)
        by_quantile[values["quantile"]] = values
      results.append(by_quantile)

    quantiles = sorted(results[0])
    for name, by_quantile in zip(names, results):
      if sorted(by_quantile) != quantiles:
        raise ValidationError("models", f"Quantiles of '{name}' do not match those of '{names[0]}'")

    columns = ["quantile"]
    for name in names:
      columns += [f"{name}:mean_deviance", f"{name}:plugin_deviance", f"{name}:pd", f"{name}:dic"]
    columns += ["preferred", "dic_gap"]

    rows = []
    for tau in quantiles:
      row: list = [tau]
      scores = []
      for by_quantile in results:
        v = by_quantile[tau]
        row += [v["mean_deviance"], v["plugin_deviance"], v["pd"], v["dic"]]
        scores.append(v["dic"])
      order = np.argsort(scores, kind="stable")
      row += [names[order[0]], float(scores[order[1]] - scores[order[0]])]
      rows.append(row)

    out = args.output or default_output_root()
    out.mkdir(parents=True, exist_ok=True)
    table = reports.frame(columns, rows)
    reports.write_table(out / "comparison.tsv", "comparison", table)
    self.display_rows("Model comparison (lower DIC is better)", table)
    return 0

  def cmd_simulate(self, args: argparse.Namespace) -> int:
    """Write a synthetic dataset, its graph (scenario C) and the truth file."""
    label = str(args.scenario).upper()
    if label not in SCENARIOS:
      raise ValidationError("scenario", f"Unknown scenario '{args.scenario}', expected one of A, B, C")

    graph = None
    if label == "A":
      dataset, scenario = synth.scenario_a_linear(args.n, args.seed)
    elif label == "B":
      dataset, scenario = synth.scenario_b_smooth(args.n, args.seed)
    else:
      dataset, graph, scenario = synth.scenario_c_spatial(args.grid_side, args.per_region, args.seed)

    out = args.output or default_output_root()
    out.mkdir(parents=True, exist_ok=True)
    write_raw_file(dataset, out / "data.raw")
    if graph is not None:
      write_gra_file(graph, out / "graph.gra")
    with open(out / "truth.json", "w", encoding="utf-8", newline="\n") as f:
      json.dump(scenario.to_dict(), f, indent=2, sort_keys=True)
      f.write("\n")

    self.show_success(f"Scenario {label} (n={scenario.n}) written to {out}")
    return 0

  def display_rows(self, title: str, df: pd.DataFrame) -> None:
    """Render a result table in the console."""
    table = Table(title=title, box=box.ROUNDED)
    for column in df.columns:
      table.add_column(str(column))
    for row in df.itertuples(index=False):
      table.add_row(*(reports.format_cell(v) for v in row))
    self.console.print(table)


def main(argv: Optional[Sequence[str]] = None) -> int:
  return GeoquantCLI().run(argv)
