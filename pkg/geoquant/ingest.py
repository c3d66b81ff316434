"""
Dataset ingestion.

Reads whitespace-delimited data files, standardizes columns and assigns
observations to response-quantile bands.
"""

import logging
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, TextIO

import numpy as np

from geoquant.models import Dataset, ParseError, StandardizationReport, ValidationError

logger = logging.getLogger(__name__)

MISSING_MARKERS = frozenset({".", "NA", ""})


class Band(str, Enum):
  LOW = "LOW"
  MID = "MID"
  HIGH = "HIGH"


def _split_row(line: str, width: int) -> list[str]:
  # Tab-separated files may carry empty fields; whitespace files cannot.
  if "\t" in line:
    tokens = [t.strip() for t in line.rstrip("\r\n").split("\t")]
    if len(tokens) == width:
      return tokens
  return line.split()


def read_raw(source: TextIO, region_column: Optional[str] = None) -> tuple[Dataset, int]:
  """Parse a dataset file. Returns the Dataset and the number of dropped rows."""
  lines = iter(enumerate(source, start=1))

  header: list[str] = []
  for lineno, line in lines:
    header = line.split()
    if header:
      break
  if not header:
    raise ParseError(1, "Missing header line")

  seen = set()
  for name in header:
    if name in seen:
      raise ParseError(lineno, f"Duplicate column name '{name}'")
    seen.add(name)

  rows: list[list[float]] = []
  dropped = 0
  for lineno, line in lines:
    if not line.strip():
      continue

    tokens = _split_row(line, len(header))
    if len(tokens) != len(header):
      raise ParseError(lineno, f"Expected {len(header)} values, found {len(tokens)}")

    if any(t in MISSING_MARKERS for t in tokens):
      dropped += 1
      continue

    try:
      values = [float(t) for t in tokens]
    except ValueError:
      raise ParseError(lineno, "Non-numeric token")

    if not all(np.isfinite(values)):
      raise ParseError(lineno, "Non-finite value")
    rows.append(values)

  if not rows:
    raise ParseError(lineno, "No complete data rows")

  if region_column is not None and region_column not in header:
    raise ValidationError("region_column", f"Unknown column '{region_column}'")

  table = np.array(rows, dtype=float)
  dataset = Dataset(
    tuple(header),
    {name: table[:, j] for j, name in enumerate(header)},
    region_column,
  )
  if dropped:
    logger.info("Dropped %d incomplete row(s)", dropped)
  return dataset, dropped


def read_raw_file(path: Path, region_column: Optional[str] = None) -> tuple[Dataset, int]:
  """Read a dataset file from disk."""
  with open(path, "r", encoding="utf-8") as f:
    return read_raw(f, region_column)


def _format_value(value: float, integral: bool) -> str:
  if integral:
    return str(int(value))
  return repr(float(value))


def write_raw(dataset: Dataset, sink: TextIO) -> None:
  """Serialize a Dataset in the whitespace format read by read_raw."""
  sink.write(" ".join(dataset.column_names) + "\n")
  columns = [dataset.columns[name] for name in dataset.column_names]
  integral = [name == dataset.region_column for name in dataset.column_names]
  for i in range(dataset.n):
    sink.write(" ".join(_format_value(col[i], flag) for col, flag in zip(columns, integral)) + "\n")


def write_raw_file(dataset: Dataset, path: Path) -> None:
  with open(path, "w", encoding="utf-8") as f:
    write_raw(dataset, f)


def standardize(dataset: Dataset, cols: Iterable[str]) -> tuple[Dataset, StandardizationReport]:
  """Replace each named column by (value - mean) / sample sd."""
  cols = tuple(cols)
  means: dict[str, float] = {}
  sds: dict[str, float] = {}
  updates: dict[str, np.ndarray] = {}

  for name in cols:
    values = dataset.column(name)
    if values.shape[0] < 2:
      raise ValidationError(name, "At least two rows are needed to standardize")
    sd = float(np.std(values, ddof=1))
    if not sd > 0.0:
      raise ValidationError(name, "Column is constant and cannot be standardized")
    mean = float(np.mean(values))
    means[name] = mean
    sds[name] = sd
    updates[name] = (values - mean) / sd

  report = StandardizationReport(cols, means, sds)
  return dataset.with_columns(updates), report


def destandardize(dataset: Dataset, report: StandardizationReport) -> Dataset:
  """Invert standardize for every column recorded in the report."""
  return dataset.with_columns({
    name: report.to_original(name, dataset.column(name)) for name in report.columns
  })


def sample_quantile(values: np.ndarray, p, axis: Optional[int] = None) -> np.ndarray:
  """Linear-interpolation sample quantile at position (n - 1) p + 1."""
  return np.quantile(np.asarray(values, dtype=float), p, axis=axis, method="linear")


def quantile_bands(values: np.ndarray, low_q: float = 0.15, high_q: float = 0.85) -> list[Band]:
  """Tag each value LOW (<= q(low_q)), HIGH (>= q(high_q)) or MID."""
  values = np.asarray(values, dtype=float)
  if values.size == 0:
    raise ValidationError("values", "No values to band")
  if not np.all(np.isfinite(values)):
    raise ValidationError("values", "Values must be finite")
  if not 0.0 < low_q < high_q < 1.0:
    raise ValidationError("quantiles", "Need 0 < low_q < high_q < 1")

  low, high = sample_quantile(values, [low_q, high_q])
  if low == high:
    raise ValidationError("values", "Degenerate spread: low and high quantiles coincide")

  bands = []
  for v in values:
    if v <= low:
      bands.append(Band.LOW)
    elif v >= high:
      bands.append(Band.HIGH)
    else:
      bands.append(Band.MID)
  return bands
