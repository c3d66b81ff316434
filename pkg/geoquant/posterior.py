"""
Posterior summaries of a fit: credible intervals, DIC, effect curves and
the per-region spatial table.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from geoquant.basis import design_matrix
from geoquant.ingest import sample_quantile
from geoquant.likelihood import ald_logdensity
from geoquant.models import ValidationError

if TYPE_CHECKING:
  from geoquant.engine import FitResult

SIGMA = "sigma"


@dataclass(frozen=True)
class Summary:
  """Posterior mean with the 2.5% / 97.5% quantiles of the stored draws."""

  mean: float
  lower: float
  upper: float
  significant: bool


@dataclass(frozen=True)
class DicComponents:
  mean_deviance: float
  plugin_deviance: float
  pd: float
  dic: float


@dataclass(frozen=True)
class EffectCurve:
  term: str
  grid: np.ndarray
  mean: np.ndarray
  lower: np.ndarray
  upper: np.ndarray


@dataclass(frozen=True)
class SpatialEffect:
  region: str
  mean: float
  lower: float
  upper: float
  significant: bool


def summarize(draws) -> Summary:
  """Mean and 95% credible interval; significant when 0 lies outside the interval."""
  draws = np.asarray(draws, dtype=float).ravel()
  if draws.size == 0:
    raise ValidationError("draws", "No draws to summarize")
  if draws.size < 2:
    raise ValidationError("draws", "At least two draws are needed")

  lower, upper = sample_quantile(draws, [0.025, 0.975])
  lower, upper = float(lower), float(upper)
  return Summary(float(np.mean(draws)), lower, upper, bool(lower > 0.0 or upper < 0.0))


def variance_name(term: str) -> str:
  return f"tau2_{term}"


def summarize_fit(fit: FitResult) -> dict[str, Summary]:
  """Summaries of every linear coefficient, the scale and every variance parameter."""
  summaries = {
    name: summarize(fit.beta_draws[:, j]) for j, name in enumerate(fit.linear_names)
  }
  summaries[SIGMA] = summarize(fit.sigma_draws)
  for term, draws in fit.variance_draws.items():
    summaries[variance_name(term)] = summarize(draws)
  return summaries


def linear_predictor(fit: FitResult, beta, gammas: dict, spatial) -> np.ndarray:
  """Quantile predictor for given coefficient values."""
  eta = fit.linear_design @ np.asarray(beta, dtype=float)
  for smooth in fit.smooth_designs:
    eta = eta + smooth.matrix @ np.asarray(gammas[smooth.term.name], dtype=float)
  if fit.spatial_design is not None:
    eta = eta + np.asarray(spatial, dtype=float)[fit.spatial_design.index]
  return eta


def fitted_quantiles(fit: FitResult) -> np.ndarray:
  """Posterior-mean quantile predictor of every observation."""
  return linear_predictor(
    fit,
    fit.beta_draws.mean(axis=0),
    {name: draws.mean(axis=0) for name, draws in fit.smooth_draws.items()},
    fit.spatial_draws.mean(axis=0) if fit.spatial_draws is not None else None,
  )


def deviance(fit: FitResult, eta: np.ndarray, sigma: float) -> float:
  """-2 times the asymmetric Laplace log-likelihood."""
  return -2.0 * float(np.sum(ald_logdensity(fit.response, eta, sigma, fit.quantile)))


def dic(fit: FitResult) -> DicComponents:
  """Mean deviance, plug-in deviance at the posterior means, pD and DIC."""
  mean_dev = float(np.mean(fit.deviance))
  plugin = deviance(fit, fitted_quantiles(fit), float(np.mean(fit.sigma_draws)))
  pd = mean_dev - plugin
  return DicComponents(mean_dev, plugin, pd, mean_dev + pd)


def calibration(fit: FitResult) -> float:
  """Fraction of observations below the fitted quantile predictor."""
  return float(np.mean(fit.response < fitted_quantiles(fit)))


def effect_curve(fit: FitResult, term: str, grid_size: int = 100) -> EffectCurve:
  """Pointwise posterior mean and 95% band of a smooth effect on an equally spaced grid."""
  for smooth in fit.smooth_designs:
    if smooth.term.name == term:
      break
  else:
    raise ValidationError("term", f"'{term}' is not a smooth term of this fit")
  if grid_size < 2:
    raise ValidationError("grid_size", "Grid needs at least two points")

  basis = smooth.basis
  grid = np.linspace(basis.x_min, basis.x_max, grid_size)
  values = fit.smooth_draws[term] @ design_matrix(grid, basis).T
  lower, upper = sample_quantile(values, [0.025, 0.975], axis=0)
  if fit.report is not None:
    grid = fit.report.to_original(term, grid)
  return EffectCurve(term, grid, values.mean(axis=0), lower, upper)


def spatial_table(fit: FitResult) -> list[SpatialEffect]:
  """Per-region summaries in graph label order."""
  if fit.spatial_design is None or fit.spatial_draws is None:
    raise ValidationError("spatial", "This fit has no spatial term")

  table = []
  for r, label in enumerate(fit.spatial_design.graph.labels):
    s = summarize(fit.spatial_draws[:, r])
    table.append(SpatialEffect(label, s.mean, s.lower, s.upper, s.significant))
  return table
