"""
Data models for geoquant.

Contains the error hierarchy, field validators and the shared domain types
(Dataset, StandardizationReport, McmcConfig, SmoothTerm, ModelSpec).
"""

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

import numpy as np


class GeoquantError(Exception):
  """Base class for every error raised by geoquant."""


class ValidationError(GeoquantError):
  """Raised when validation fails for a field."""

  def __init__(self, field: str, message: str):
    self.field = field
    self.message = message
    super().__init__(f"{field}: {message}")


class ParseError(GeoquantError):
  """Raised when a dataset or graph file cannot be parsed."""

  def __init__(self, line: int, message: str):
    self.line = line
    self.message = message
    super().__init__(f"line {line}: {message}")


class GraphError(GeoquantError):
  """Raised when a region graph is structurally invalid."""


class SamplerError(GeoquantError):
  """Raised when the Gibbs sampler hits a numerical failure."""


def validate_quantile(value: float, field_name: str = "quantile") -> float:
  """Validate a probability strictly inside (0, 1)."""
  try:
    value = float(value)
  except (TypeError, ValueError):
    raise ValidationError(field_name, "Quantile must be a number")

  if not 0.0 < value < 1.0:
    raise ValidationError(field_name, "Quantile must lie strictly between 0 and 1")

  return value


def validate_quantile_list(values: Iterable[float], field_name: str = "quantiles") -> tuple[float, ...]:
  """Validate a non-empty, strictly increasing list of quantiles."""
  result = tuple(validate_quantile(v, field_name) for v in values)
  if not result:
    raise ValidationError(field_name, "At least one quantile is required")

  if any(b <= a for a, b in zip(result, result[1:])):
    raise ValidationError(field_name, "Quantiles must be strictly increasing")

  return result


def validate_count(value: int, field_name: str, minimum: int = 1) -> int:
  """Validate an integer count no smaller than `minimum`."""
  if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
    raise ValidationError(field_name, "Value must be an integer")

  if value < minimum:
    raise ValidationError(field_name, f"Value must be at least {minimum}")

  return int(value)


def validate_positive(value: float, field_name: str) -> float:
  """Validate a strictly positive finite real."""
  value = float(value)
  if not np.isfinite(value) or value <= 0.0:
    raise ValidationError(field_name, "Value must be positive and finite")
  return value


def quantile_label(tau: float) -> str:
  """Directory label for a quantile, e.g. 0.15 -> 'q15', 0.5 -> 'q50'."""
  text = f"{tau * 100:.10g}".replace(".", "_")
  return f"q{text}"


@dataclass(frozen=True)
class Dataset:
  """Rectangular table of named numeric columns with an optional region column."""

  column_names: tuple[str, ...]
  columns: Mapping[str, np.ndarray]
  region_column: Optional[str] = None

  def __post_init__(self):
    names = tuple(self.column_names)
    if not names:
      raise ValidationError("columns", "Dataset needs at least one column")

    seen = set()
    for name in names:
      if name in seen:
        raise ValidationError("columns", f"Duplicate column name '{name}'")
      seen.add(name)

    frozen = {}
    lengths = set()
    for name in names:
      if name not in self.columns:
        raise ValidationError("columns", f"Missing data for column '{name}'")
      values = np.array(self.columns[name], dtype=float)
      if values.ndim != 1:
        raise ValidationError(name, "Column must be one-dimensional")
      if not np.all(np.isfinite(values)):
        raise ValidationError(name, "Column contains non-finite values")
      values.setflags(write=False)
      frozen[name] = values
      lengths.add(values.shape[0])

    if len(lengths) != 1:
      raise ValidationError("columns", "All columns must have the same length")
    if lengths.pop() < 1:
      raise ValidationError("columns", "Dataset needs at least one row")

    if self.region_column is not None:
      if self.region_column not in frozen:
        raise ValidationError("region_column", f"Unknown column '{self.region_column}'")
      regions = frozen[self.region_column]
      if not np.all(regions == np.round(regions)):
        raise ValidationError(self.region_column, "Region identifiers must be integers")

    object.__setattr__(self, "column_names", names)
    object.__setattr__(self, "columns", frozen)

  @property
  def n(self) -> int:
    return self.columns[self.column_names[0]].shape[0]

  def column(self, name: str) -> np.ndarray:
    """Return a column by name, raising ValidationError if it is unknown."""
    if name not in self.columns:
      raise ValidationError(name, "Column not found in dataset")
    return self.columns[name]

  def regions(self) -> np.ndarray:
    """Integer region identifiers of every row."""
    if self.region_column is None:
      raise ValidationError("region_column", "Dataset has no region column")
    return self.columns[self.region_column].astype(np.int64)

  def with_columns(self, updates: Mapping[str, np.ndarray]) -> "Dataset":
    """Return a copy with some columns replaced."""
    merged = dict(self.columns)
    for name, values in updates.items():
      if name not in merged:
        raise ValidationError(name, "Column not found in dataset")
      merged[name] = values
    return Dataset(self.column_names, merged, self.region_column)


@dataclass(frozen=True)
class StandardizationReport:
  """Means and sample standard deviations used to standardize columns."""

  columns: tuple[str, ...] = ()
  means: Mapping[str, float] = field(default_factory=dict)
  sds: Mapping[str, float] = field(default_factory=dict)

  def __post_init__(self):
    for name in self.columns:
      if not self.sds.get(name, 0.0) > 0.0:
        raise ValidationError(name, "Recorded standard deviation must be positive")

  def to_original(self, name: str, values: np.ndarray) -> np.ndarray:
    """Back-transform standardized values of one column."""
    values = np.asarray(values, dtype=float)
    if name not in self.columns:
      return values
    return values * self.sds[name] + self.means[name]

  def to_dict(self) -> dict:
    return {
      "columns": list(self.columns),
      "means": {k: float(self.means[k]) for k in self.columns},
      "sds": {k: float(self.sds[k]) for k in self.columns},
    }


@dataclass(frozen=True)
class McmcConfig:
  """Iteration schedule and seed of one MCMC chain."""

  iterations: int = 52000
  burnin: int = 2000
  thin: int = 50
  seed: int = 58581

  def __post_init__(self):
    validate_count(self.iterations, "iterations")
    validate_count(self.burnin, "burnin", minimum=0)
    validate_count(self.thin, "thin")
    validate_count(self.seed, "seed", minimum=0)
    if self.burnin >= self.iterations:
      raise ValidationError("burnin", "Burn-in must be smaller than the total number of iterations")

  @property
  def stored_count(self) -> int:
    return (self.iterations - self.burnin) // self.thin

  def is_stored(self, iteration: int) -> bool:
    """Whether the 1-based `iteration` is kept after burn-in and thinning."""
    offset = iteration - self.burnin
    return offset > 0 and offset % self.thin == 0

  def with_seed(self, seed: int) -> "McmcConfig":
    return McmcConfig(self.iterations, self.burnin, self.thin, seed)


@dataclass(frozen=True)
class SmoothTerm:
  """P-spline settings of one nonlinear covariate effect."""

  name: str
  n_basis: int = 22
  degree: int = 3
  penalty_order: int = 2

  def __post_init__(self):
    validate_count(self.degree, "degree")
    validate_count(self.penalty_order, "penalty_order")
    validate_count(self.n_basis, "n_basis", minimum=self.degree + 1)
    if self.n_basis <= self.penalty_order:
      raise ValidationError("n_basis", "Number of basis functions must exceed the penalty order")


@dataclass(frozen=True)
class ModelSpec:
  """Response, effect terms, quantile and sampler settings of one fit."""

  response: str
  linear: tuple[str, ...] = ()
  smooth: tuple[SmoothTerm, ...] = ()
  spatial: Optional[str] = None
  quantile: float = 0.5
  mcmc: McmcConfig = field(default_factory=McmcConfig)
  hyper_a: float = 0.001
  hyper_b: float = 0.001
  scale_a: float = 0.001
  scale_b: float = 0.001

  def __post_init__(self):
    object.__setattr__(self, "linear", tuple(self.linear))
    object.__setattr__(self, "smooth", tuple(self.smooth))
    object.__setattr__(self, "quantile", validate_quantile(self.quantile))
    for name in ("hyper_a", "hyper_b", "scale_a", "scale_b"):
      validate_positive(getattr(self, name), name)

    names = [self.response, *self.linear, *(t.name for t in self.smooth)]
    if self.spatial is not None:
      names.append(self.spatial)
    if len(set(names)) != len(names):
      raise ValidationError("terms", "A column may appear in only one model term")

  def check_against(self, dataset: Dataset) -> None:
    """Raise ValidationError if the dataset lacks a column the model uses."""
    for name in (self.response, *self.linear, *(t.name for t in self.smooth)):
      dataset.column(name)
    if self.spatial is not None:
      dataset.column(self.spatial)
