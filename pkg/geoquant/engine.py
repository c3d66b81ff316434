"""
Gibbs sampler for Bayesian geoadditive quantile regression.

The asymmetric Laplace working likelihood is written as a location-scale
mixture y = eta + xi w + kappa sqrt(sigma w) z with w ~ Exp(mean sigma),
which makes every full conditional available in closed form.
"""

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular

from geoquant.basis import PenaltyMatrix, SplineBasis, design_matrix, difference_penalty, knot_sequence
from geoquant.graph import GmrfPrecision, RegionGraph, precision_matrix, region_index
from geoquant.ingest import sample_quantile
from geoquant.likelihood import ald_logdensity, check_loss, mixture_constants
from geoquant.models import (
  Dataset,
  ModelSpec,
  SamplerError,
  SmoothTerm,
  StandardizationReport,
  ValidationError,
)
from geoquant import posterior

logger = logging.getLogger(__name__)

INTERCEPT = "const"
JITTER = 1e-8
CHI_FLOOR = 1e-10


def sample_latent_weight(residual, sigma: float, tau: float, rng: np.random.Generator):
  """Draw w from GIG(1/2, chi, psi) as the reciprocal of an inverse-Gaussian draw."""
  residual = np.asarray(residual, dtype=float)
  if not np.all(np.isfinite(residual)):
    raise SamplerError("Non-finite residual in latent weight update")
  if not sigma > 0.0:
    raise ValidationError("sigma", "Scale must be positive")

  xi, kappa2 = mixture_constants(tau)
  chi = np.maximum(residual ** 2 / (kappa2 * sigma), CHI_FLOOR)
  psi = xi ** 2 / (kappa2 * sigma) + 2.0 / sigma
  w = 1.0 / np.asarray(rng.wald(np.sqrt(psi / chi), psi))
  return float(w) if w.ndim == 0 else w


def _factorize(precision: np.ndarray) -> np.ndarray:
  try:
    return cholesky(precision, lower=True, check_finite=False)
  except LinAlgError:
    logger.warning("Cholesky failed, retrying with jitter %g", JITTER)

  try:
    jittered = precision + JITTER * np.eye(precision.shape[0])
    return cholesky(jittered, lower=True, check_finite=False)
  except LinAlgError:
    raise SamplerError(
      "Block precision is not positive definite even after adding jitter; "
      "check for collinear covariates or empty regions"
    )


def sample_gaussian_block(precision: np.ndarray, linear_term: np.ndarray, rng) -> np.ndarray:
  """Draw from N(P^-1 b, P^-1) through the Cholesky factor of P."""
  precision = np.atleast_2d(np.asarray(precision, dtype=float))
  linear_term = np.atleast_1d(np.asarray(linear_term, dtype=float))
  if not (np.all(np.isfinite(precision)) and np.all(np.isfinite(linear_term))):
    raise SamplerError("Non-finite block precision or linear term")

  chol = _factorize(precision)
  mean = cho_solve((chol, True), linear_term, check_finite=False)
  noise = np.asarray(rng.standard_normal(linear_term.shape[0]), dtype=float)
  return mean + solve_triangular(chol.T, noise, lower=False, check_finite=False)


@dataclass(frozen=True)
class SmoothDesign:
  term: SmoothTerm
  basis: SplineBasis
  matrix: np.ndarray
  penalty: PenaltyMatrix


@dataclass(frozen=True)
class SpatialDesign:
  column: str
  graph: RegionGraph
  precision: GmrfPrecision
  index: np.ndarray


@dataclass
class SamplerState:
  """Current values of every block of one chain."""

  beta: np.ndarray
  gammas: list[np.ndarray]
  spatial: Optional[np.ndarray]
  w: np.ndarray
  sigma: float
  smooth_variances: list[float]
  spatial_variance: float


@dataclass(frozen=True)
class FitResult:
  """Stored posterior draws of one fit together with the designs that produced them."""

  spec: ModelSpec
  report: Optional[StandardizationReport]
  response: np.ndarray
  linear_names: tuple[str, ...]
  linear_design: np.ndarray
  smooth_designs: tuple[SmoothDesign, ...]
  spatial_design: Optional[SpatialDesign]
  beta_draws: np.ndarray
  smooth_draws: dict[str, np.ndarray]
  spatial_draws: Optional[np.ndarray]
  sigma_draws: np.ndarray
  variance_draws: dict[str, np.ndarray]
  deviance: np.ndarray
  elapsed: float = 0.0
  summaries: dict[str, posterior.Summary] = field(default_factory=dict)
  dic: Optional[posterior.DicComponents] = None

  @property
  def quantile(self) -> float:
    return self.spec.quantile

  @property
  def draw_count(self) -> int:
    return self.sigma_draws.shape[0]


def _smooth_design(dataset: Dataset, term: SmoothTerm) -> SmoothDesign:
  x = dataset.column(term.name)
  basis = knot_sequence(float(x.min()), float(x.max()), term.n_basis, term.degree)
  return SmoothDesign(term, basis, design_matrix(x, basis), difference_penalty(term.n_basis, term.penalty_order))


def _spatial_design(dataset: Dataset, graph: Optional[RegionGraph], column: str) -> SpatialDesign:
  if graph is None:
    raise ValidationError("graph", "A spatial term requires a region graph")
  values = dataset.column(column)
  if not np.all(values == np.round(values)):
    raise ValidationError(column, "Region identifiers must be integers")
  return SpatialDesign(column, graph, precision_matrix(graph), region_index(graph, values.astype(np.int64)))


def center_components(values: np.ndarray, components) -> tuple[np.ndarray, float]:
  """Remove the mean of each component; returns the centered values and the overall mean removed."""
  centered = values.copy()
  for comp in components:
    idx = np.asarray(comp)
    centered[idx] -= centered[idx].mean()
  return centered, float(values.mean() - centered.mean())


def _inverse_gamma(shape: float, scale: float, rng: np.random.Generator) -> float:
  return scale / rng.gamma(shape)


def fit(
  dataset: Dataset,
  graph: Optional[RegionGraph],
  spec: ModelSpec,
  report: Optional[StandardizationReport] = None,
) -> FitResult:
  """Run the Gibbs sampler and return thinned post-burn-in draws with summaries and DIC."""
  spec.check_against(dataset)
  mcmc = spec.mcmc
  tau = spec.quantile
  y = np.array(dataset.column(spec.response), dtype=float)
  n = y.shape[0]

  linear_names = (INTERCEPT, *spec.linear)
  x = np.column_stack([np.ones(n), *(dataset.column(c) for c in spec.linear)])
  smooths = tuple(_smooth_design(dataset, term) for term in spec.smooth)
  spatial = _spatial_design(dataset, graph, spec.spatial) if spec.spatial is not None else None

  xi, kappa2 = mixture_constants(tau)
  rng = np.random.default_rng(mcmc.seed)

  beta = np.zeros(x.shape[1])
  beta[0] = float(sample_quantile(y, tau))
  state = SamplerState(
    beta=beta,
    gammas=[np.zeros(s.term.n_basis) for s in smooths],
    spatial=np.zeros(spatial.graph.size) if spatial else None,
    w=np.ones(n),
    sigma=1.0,
    smooth_variances=[1.0 for _ in smooths],
    spatial_variance=1.0,
  )

  stored = mcmc.stored_count
  beta_draws = np.empty((stored, x.shape[1]))
  smooth_draws = {s.term.name: np.empty((stored, s.term.n_basis)) for s in smooths}
  spatial_draws = np.empty((stored, spatial.graph.size)) if spatial else None
  sigma_draws = np.empty(stored)
  variance_draws = {s.term.name: np.empty(stored) for s in smooths}
  if spatial:
    variance_draws[spatial.column] = np.empty(stored)
  deviance = np.empty(stored)

  if spatial:
    q_dense = spatial.precision.matrix.toarray().astype(float)
    n_regions = spatial.graph.size

  eta_lin = x @ state.beta
  eta_smooth = [np.zeros(n) for _ in smooths]
  eta_spatial = np.zeros(n)

  logger.info(
    "Fitting tau=%.3g: n=%d, %d linear, %d smooth, spatial=%s, %d iterations",
    tau, n, x.shape[1], len(smooths), spatial is not None, mcmc.iterations,
  )
  started = time.perf_counter()
  slot = 0

  for iteration in range(1, mcmc.iterations + 1):
    eta_other = sum(eta_smooth, np.zeros(n)) + eta_spatial
    state.w = sample_latent_weight(y - eta_lin - eta_other, state.sigma, tau, rng)
    obs_precision = 1.0 / (kappa2 * state.sigma * state.w)
    pseudo = y - xi * state.w

    # linear block, flat prior
    partial = pseudo - eta_other
    state.beta = sample_gaussian_block(
      x.T @ (obs_precision[:, None] * x), x.T @ (obs_precision * partial), rng
    )
    eta_lin = x @ state.beta

    for k, smooth in enumerate(smooths):
      b = smooth.matrix
      partial = pseudo - eta_lin - eta_spatial - sum(
        (eta_smooth[j] for j in range(len(smooths)) if j != k), np.zeros(n)
      )
      prec = b.T @ (obs_precision[:, None] * b) + smooth.penalty.matrix / state.smooth_variances[k]
      gamma = sample_gaussian_block(prec, b.T @ (obs_precision * partial), rng)
      level = float((b @ gamma).mean())
      gamma -= level
      state.gammas[k] = gamma
      eta_smooth[k] = b @ gamma
      state.beta[0] += level
      eta_lin = eta_lin + level

    if spatial:
      idx = spatial.index
      partial = pseudo - eta_lin - sum(eta_smooth, np.zeros(n))
      data_prec = np.bincount(idx, weights=obs_precision, minlength=n_regions)
      prec = q_dense / state.spatial_variance + np.diag(data_prec)
      rhs = np.bincount(idx, weights=obs_precision * partial, minlength=n_regions)
      effect, level = center_components(sample_gaussian_block(prec, rhs, rng), spatial.precision.components)
      state.spatial = effect
      eta_spatial = effect[idx]
      state.beta[0] += level
      eta_lin = eta_lin + level

    for k, smooth in enumerate(smooths):
      gamma = state.gammas[k]
      quad = float(gamma @ smooth.penalty.matrix @ gamma)
      state.smooth_variances[k] = _inverse_gamma(
        spec.hyper_a + smooth.penalty.rank / 2.0, spec.hyper_b + quad / 2.0, rng
      )

    if spatial:
      quad = float(state.spatial @ (spatial.precision.matrix @ state.spatial))
      state.spatial_variance = _inverse_gamma(
        spec.hyper_a + spatial.precision.rank / 2.0, spec.hyper_b + quad / 2.0, rng
      )

    eta = eta_lin + sum(eta_smooth, np.zeros(n)) + eta_spatial
    resid = y - eta - xi * state.w
    state.sigma = _inverse_gamma(
      spec.scale_a + 1.5 * n,
      spec.scale_b + state.w.sum() + float(np.sum(resid ** 2 / (2.0 * kappa2 * state.w))),
      rng,
    )

    if mcmc.is_stored(iteration):
      beta_draws[slot] = state.beta
      for k, smooth in enumerate(smooths):
        smooth_draws[smooth.term.name][slot] = state.gammas[k]
        variance_draws[smooth.term.name][slot] = state.smooth_variances[k]
      if spatial:
        spatial_draws[slot] = state.spatial
        variance_draws[spatial.column][slot] = state.spatial_variance
      sigma_draws[slot] = state.sigma
      deviance[slot] = -2.0 * float(np.sum(ald_logdensity(y, eta, state.sigma, tau)))
      slot += 1

  elapsed = time.perf_counter() - started
  logger.info("Finished tau=%.3g in %.1f s, %d draws stored", tau, elapsed, slot)

  result = FitResult(
    spec=spec,
    report=report,
    response=y,
    linear_names=linear_names,
    linear_design=x,
    smooth_designs=smooths,
    spatial_design=spatial,
    beta_draws=beta_draws,
    smooth_draws=smooth_draws,
    spatial_draws=spatial_draws,
    sigma_draws=sigma_draws,
    variance_draws=variance_draws,
    deviance=deviance,
    elapsed=elapsed,
  )
  return replace(result, summaries=posterior.summarize_fit(result), dic=posterior.dic(result))
