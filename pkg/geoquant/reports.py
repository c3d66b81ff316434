"""
Versioned result tables.

Every file is tab-separated text whose first line is a schema tag
("# schema: geoquant.<table>/<version>") followed by a one-line header.
Tables are pandas DataFrames on both sides of the file.
"""

import json
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
import pandas as pd

from geoquant import posterior
from geoquant.descriptive import BandStat
from geoquant.engine import FitResult
from geoquant.ingest import Band
from geoquant.models import ParseError

SCHEMA_VERSION = 1
SCHEMA_PREFIX = "# schema: geoquant."
NA = "NA"
FLOAT_FORMAT = "%.10g"
DIC_COLUMNS = ("quantile", "mean_deviance", "plugin_deviance", "pd", "dic")


def schema_tag(table: str) -> str:
  return f"{SCHEMA_PREFIX}{table}/{SCHEMA_VERSION}"


def format_cell(value) -> str:
  """Text form of one cell, as shown in the console."""
  if value is None:
    return NA
  if isinstance(value, (bool, np.bool_)):
    return "true" if value else "false"
  if isinstance(value, (int, np.integer)):
    return str(int(value))
  if isinstance(value, (float, np.floating)):
    if math.isnan(value):
      return NA
    return f"{float(value):.10g}"
  if isinstance(value, Band):
    return value.value
  return str(value)


def _cell(value):
  if isinstance(value, (bool, np.bool_)):
    return "true" if value else "false"
  if isinstance(value, Band):
    return value.value
  return value


def frame(columns: Sequence[str], rows: Iterable[Sequence]) -> pd.DataFrame:
  """Build a table from row tuples."""
  return pd.DataFrame([list(row) for row in rows], columns=list(columns))


def write_table(path: Path, table: str, df: pd.DataFrame) -> Path:
  """Write one schema-tagged table and return its path; flags become true/false and bands their labels."""
  df = df.copy()
  for column in df.columns:
    if df[column].dtype == bool or df[column].dtype == object:
      df[column] = df[column].map(_cell)
  df = df.infer_objects()
  with open(path, "w", encoding="utf-8", newline="\n") as f:
    f.write(schema_tag(table) + "\n")
    df.to_csv(f, sep="\t", index=False, na_rep=NA, float_format=FLOAT_FORMAT, lineterminator="\n")
  return path


def read_table(path: Path, table: Optional[str] = None, dtype=None) -> pd.DataFrame:
  """Read a schema-tagged table; checks the tag when `table` is given."""
  with open(path, "r", encoding="utf-8") as f:
    tag = f.readline().rstrip("\n")

  if not tag.startswith(SCHEMA_PREFIX):
    raise ParseError(1, f"{path} has no schema tag")
  if table is not None and tag != schema_tag(table):
    raise ParseError(1, f"{path} is not a '{table}' table (found '{tag}')")

  try:
    return pd.read_csv(
      path, sep="\t", skiprows=1, dtype=dtype, na_values=[NA], keep_default_na=False,
      true_values=["true"], false_values=["false"],
    )
  except pd.errors.EmptyDataError:
    raise ParseError(2, f"{path} has no header")
  except pd.errors.ParserError as e:
    raise ParseError(2, f"Rows of {path} do not match the header: {e}")


def _summary_frame(summaries: dict[str, posterior.Summary], names: Sequence[str]) -> pd.DataFrame:
  return pd.DataFrame({
    "term": list(names),
    "mean": [summaries[n].mean for n in names],
    "lower": [summaries[n].lower for n in names],
    "upper": [summaries[n].upper for n in names],
    "significant": [summaries[n].significant for n in names],
  })


def _draws_frame(draws: np.ndarray, columns: Sequence[str]) -> pd.DataFrame:
  df = pd.DataFrame(draws, columns=list(columns))
  df.insert(0, "draw", np.arange(1, draws.shape[0] + 1))
  return df


def write_fit_outputs(fit: FitResult, directory: Path, grid_size: int = 100) -> list[Path]:
  """Write every table of one quantile fit into `directory`."""
  directory.mkdir(parents=True, exist_ok=True)
  written = [write_table(
    directory / "coefficients.tsv", "coefficients", _summary_frame(fit.summaries, fit.linear_names)
  )]

  hyper_names = [posterior.SIGMA] + [posterior.variance_name(t) for t in fit.variance_draws]
  written.append(write_table(
    directory / "hyperparameters.tsv", "hyperparameters", _summary_frame(fit.summaries, hyper_names)
  ))

  for smooth in fit.smooth_designs:
    curve = posterior.effect_curve(fit, smooth.term.name, grid_size)
    written.append(write_table(
      directory / f"effect_{curve.term}.tsv", "effect",
      pd.DataFrame({"x": curve.grid, "mean": curve.mean, "lower": curve.lower, "upper": curve.upper}),
    ))

  if fit.spatial_design is not None:
    effects = posterior.spatial_table(fit)
    written.append(write_table(
      directory / "spatial.tsv", "spatial",
      frame(
        ("region", "mean", "lower", "upper", "significant"),
        [(e.region, e.mean, e.lower, e.upper, e.significant) for e in effects],
      ),
    ))

  d = fit.dic
  written.append(write_table(
    directory / "dic.tsv", "dic",
    frame(DIC_COLUMNS, [(fit.quantile, d.mean_deviance, d.plugin_deviance, d.pd, d.dic)]),
  ))

  written.append(write_table(
    directory / "predictions.tsv", "predictions",
    pd.DataFrame({
      "row": np.arange(1, fit.response.size + 1),
      "observed": fit.response,
      "fitted": posterior.fitted_quantiles(fit),
    }),
  ))

  written.extend(write_draws(fit, directory))
  written.append(write_model_file(fit, directory / "model.json"))
  return written




def write_draws(fit: FitResult, directory: Path) -> list[Path]:
  """Raw thinned draws, one file per coefficient block plus the scalar parameters."""
  written = [write_table(
    directory / "draws_linear.tsv", "draws", _draws_frame(fit.beta_draws, fit.linear_names)
  )]

  for term, draws in fit.smooth_draws.items():
    columns = [f"b{j + 1}" for j in range(draws.shape[1])]
    written.append(write_table(directory / f"draws_{term}.tsv", "draws", _draws_frame(draws, columns)))

  if fit.spatial_draws is not None:
    written.append(write_table(
      directory / "draws_spatial.tsv", "draws",
      _draws_frame(fit.spatial_draws, fit.spatial_design.graph.labels),
    ))

  hyper = {posterior.SIGMA: fit.sigma_draws}
  hyper.update({posterior.variance_name(t): draws for t, draws in fit.variance_draws.items()})
  hyper["deviance"] = fit.deviance
  df = pd.DataFrame(hyper)
  df.insert(0, "draw", np.arange(1, fit.draw_count + 1))
  written.append(write_table(directory / "draws_hyper.tsv", "draws", df))
  return written


def write_model_file(fit: FitResult, path: Path) -> Path:
  """Model settings and standardization moments needed to reuse the outputs."""
  spec = fit.spec
  data = {
    "schema": schema_tag("model"),
    "response": spec.response,
    "linear": list(spec.linear),
    "smooth": [
      {"name": t.name, "n_basis": t.n_basis, "degree": t.degree, "penalty_order": t.penalty_order}
      for t in spec.smooth
    ],
    "spatial": spec.spatial,
    "quantile": spec.quantile,
    "mcmc": {
      "iterations": spec.mcmc.iterations,
      "burnin": spec.mcmc.burnin,
      "thin": spec.mcmc.thin,
      "seed": spec.mcmc.seed,
    },
    "hyperprior": {"a": spec.hyper_a, "b": spec.hyper_b},
    "stored_draws": fit.draw_count,
    "standardization": fit.report.to_dict() if fit.report is not None else None,
  }
  with open(path, "w", encoding="utf-8", newline="\n") as f:
    json.dump(data, f, indent=2, sort_keys=True)
    f.write("\n")
  return path


def read_dic(directory: Path) -> dict[str, float]:
  """DIC components of one quantile result directory."""
  df = read_table(directory / "dic.tsv", "dic")
  if len(df) != 1 or list(df.columns) != list(DIC_COLUMNS):
    raise ParseError(3, f"{directory / 'dic.tsv'} must hold exactly one row of DIC components")
  return {key: float(value) for key, value in df.iloc[0].items()}


def write_band_summary(path: Path, stats: Sequence[BandStat]) -> Path:
  return write_table(path, "band_summary", frame(
    ("band", "stratum", "count", "mean", "se"),
    [(s.band, s.stratum, s.count, s.mean, s.se) for s in stats],
  ))
