"""
Run configuration for the command-line front end.

Values come from defaults, then an optional JSON config file, then
command-line flags; later sources win.
"""

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

from geoquant.models import (
  McmcConfig,
  ModelSpec,
  SmoothTerm,
  ValidationError,
  validate_count,
  validate_quantile_list,
)

OUTPUT_ROOT_ENV = "GEOQUANT_OUTPUT_ROOT"
DEFAULT_OUTPUT = "results"
DEFAULT_QUANTILES = (0.15, 0.5, 0.85)

_LIST_KEYS = ("linear", "smooth", "quantiles")
_MCMC_KEYS = ("iterations", "burnin", "thin", "seed")


def default_output_root() -> Path:
  return Path(os.environ.get(OUTPUT_ROOT_ENV, DEFAULT_OUTPUT))


@dataclass(frozen=True)
class RunConfig:
  """Everything one describe/fit run needs."""

  dataset: Path
  response: str
  graph: Optional[Path] = None
  linear: tuple[str, ...] = ()
  smooth: tuple[str, ...] = ()
  spatial: Optional[str] = None
  n_basis: int = 22
  quantiles: tuple[float, ...] = DEFAULT_QUANTILES
  mcmc: McmcConfig = field(default_factory=McmcConfig)
  hyper_a: float = 0.001
  hyper_b: float = 0.001
  output: Path = field(default_factory=default_output_root)
  standardize: bool = True
  stratifier: Optional[str] = None
  covariate: Optional[str] = None
  jobs: int = 1

  def __post_init__(self):
    object.__setattr__(self, "dataset", Path(self.dataset))
    object.__setattr__(self, "output", Path(self.output))
    if self.graph is not None:
      object.__setattr__(self, "graph", Path(self.graph))
    object.__setattr__(self, "linear", tuple(self.linear))
    object.__setattr__(self, "smooth", tuple(self.smooth))
    object.__setattr__(self, "quantiles", validate_quantile_list(self.quantiles))
    validate_count(self.n_basis, "n_basis", minimum=4)
    validate_count(self.jobs, "jobs")
    if not self.response:
      raise ValidationError("response", "A response column is required")
    if self.spatial is not None and self.graph is None:
      raise ValidationError("graph", "A spatial term requires a graph file")

  @property
  def variables(self) -> tuple[str, ...]:
    """Response followed by every covariate, without duplicates."""
    names = [self.response, *self.linear, *self.smooth]
    return tuple(dict.fromkeys(names))

  def model_spec(self, tau: float, seed_offset: int = 0) -> ModelSpec:
    return ModelSpec(
      response=self.response,
      linear=self.linear,
      smooth=tuple(SmoothTerm(name, n_basis=self.n_basis) for name in self.smooth),
      spatial=self.spatial,
      quantile=tau,
      mcmc=self.mcmc.with_seed(self.mcmc.seed + seed_offset),
      hyper_a=self.hyper_a,
      hyper_b=self.hyper_b,
      scale_a=self.hyper_a,
      scale_b=self.hyper_b,
    )


def load_config_file(path: Path) -> dict:
  """Read a declarative JSON config file."""
  try:
    with open(path, "r", encoding="utf-8") as f:
      data = json.load(f)
  except json.JSONDecodeError as e:
    raise ValidationError("config", f"Invalid JSON in {path}: {e}")
  if not isinstance(data, dict):
    raise ValidationError("config", "Config file must hold a JSON object")
  return data


def _as_tuple(value: Any) -> tuple:
  if value is None:
    return ()
  if isinstance(value, str):
    return tuple(v for v in value.replace(",", " ").split() if v)
  return tuple(value)


def build_run_config(file_values: Mapping[str, Any], overrides: Mapping[str, Any]) -> RunConfig:
  """Merge config-file values with flags; flags set to None do not override."""
  merged = dict(file_values)
  merged.update({k: v for k, v in overrides.items() if v is not None})

  unknown = set(merged) - set(RunConfig.__dataclass_fields__) - set(_MCMC_KEYS)
  if unknown:
    raise ValidationError("config", f"Unknown setting(s): {', '.join(sorted(unknown))}")

  for key in _LIST_KEYS:
    if key in merged:
      merged[key] = _as_tuple(merged[key])
  if "quantiles" in merged:
    try:
      merged["quantiles"] = tuple(float(q) for q in merged["quantiles"])
    except ValueError:
      raise ValidationError("quantiles", "Quantiles must be numbers")

  defaults = McmcConfig()
  mcmc_values = {key: merged.pop(key, getattr(defaults, key)) for key in _MCMC_KEYS}
  merged["mcmc"] = McmcConfig(**{k: int(v) for k, v in mcmc_values.items()})

  for key in ("dataset", "response"):
    if key not in merged:
      raise ValidationError(key, "Setting is required")

  return RunConfig(**merged)
