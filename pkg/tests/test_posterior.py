"""Tests for geoquant.posterior module."""

from dataclasses import replace

import numpy as np
import pytest

from geoquant import posterior, synth
from geoquant.engine import fit
from geoquant.ingest import standardize
from geoquant.models import McmcConfig, ModelSpec, SmoothTerm, ValidationError

TINY = McmcConfig(iterations=400, burnin=200, thin=2, seed=21)


@pytest.fixture(scope="module")
def smooth_fit():
  dataset, _ = synth.scenario_b_smooth(200, 3)
  dataset, report = standardize(dataset, ["y", "x"])
  spec = ModelSpec("y", smooth=(SmoothTerm("x", n_basis=10),), quantile=0.5, mcmc=TINY)
  return fit(dataset, None, spec, report)


class TestSummarize:
  def test_interval_covering_zero(self):
    s = posterior.summarize(np.linspace(-0.05, 0.95, 1000))
    assert s.mean == pytest.approx(0.45)
    assert s.lower == pytest.approx(-0.05 + 24.975 / 999)
    assert s.lower < 0.0
    assert not s.significant

  def test_interval_excluding_zero(self):
    s = posterior.summarize(np.linspace(0.1, 1.1, 1000))
    assert s.significant

  def test_negative_interval_is_significant(self):
    assert posterior.summarize(np.linspace(-2.0, -1.0, 50)).significant

  def test_too_few_draws(self):
    with pytest.raises(ValidationError):
      posterior.summarize([1.0])
    with pytest.raises(ValidationError):
      posterior.summarize([])


class TestFitSummaries:
  def test_names(self, smooth_fit):
    assert set(smooth_fit.summaries) == {"const", "sigma", "tau2_x"}
    assert posterior.variance_name("x") == "tau2_x"

  def test_dic_components_consistent(self, smooth_fit):
    d = smooth_fit.dic
    assert d.pd == pytest.approx(d.mean_deviance - d.plugin_deviance)
    assert d.dic == pytest.approx(d.mean_deviance + d.pd)

  def test_deviance_at_posterior_mean(self, smooth_fit):
    eta = posterior.fitted_quantiles(smooth_fit)
    sigma = float(smooth_fit.sigma_draws.mean())
    assert posterior.deviance(smooth_fit, eta, sigma) == pytest.approx(smooth_fit.dic.plugin_deviance)

  def test_calibration_in_range(self, smooth_fit):
    assert 0.0 <= posterior.calibration(smooth_fit) <= 1.0


class TestEffectCurve:
  def test_grid_in_original_units(self, smooth_fit):
    curve = posterior.effect_curve(smooth_fit, "x", grid_size=50)
    assert curve.grid.shape == curve.mean.shape == (50,)
    assert np.all(curve.lower <= curve.mean + 1e-12)
    assert np.all(curve.mean <= curve.upper + 1e-12)
    assert 0.0 <= curve.grid[0] < curve.grid[-1] <= 1.0

  def test_unknown_term(self, smooth_fit):
    with pytest.raises(ValidationError, match="not a smooth term"):
      posterior.effect_curve(smooth_fit, "z")

  def test_grid_too_small(self, smooth_fit):
    with pytest.raises(ValidationError):
      posterior.effect_curve(smooth_fit, "x", grid_size=1)

  def test_no_spatial_table(self, smooth_fit):
    with pytest.raises(ValidationError, match="no spatial term"):
      posterior.spatial_table(smooth_fit)


class TestSpatialTable:
  def test_one_row_per_region(self):
    dataset, graph, _ = synth.scenario_c_spatial(4, 5, 2)
    result = fit(dataset, graph, ModelSpec("y", spatial="region", mcmc=TINY))
    table = posterior.spatial_table(result)
    assert [row.region for row in table] == list(graph.labels)
    assert all(row.lower <= row.upper for row in table)


class TestDegenerateChains:
  def test_identical_draws_have_zero_pd(self, smooth_fit):
    k = smooth_fit.draw_count
    beta = np.tile(smooth_fit.beta_draws.mean(axis=0), (k, 1))
    gamma = np.tile(smooth_fit.smooth_draws["x"].mean(axis=0), (k, 1))
    sigma = np.full(k, smooth_fit.sigma_draws.mean())
    frozen = replace(smooth_fit, beta_draws=beta, smooth_draws={"x": gamma}, sigma_draws=sigma)
    level = posterior.deviance(frozen, posterior.fitted_quantiles(frozen), float(sigma[0]))
    frozen = replace(frozen, deviance=np.full(k, level))

    d = posterior.dic(frozen)
    assert d.pd == pytest.approx(0.0, abs=1e-8)
    assert d.dic == pytest.approx(d.mean_deviance)

  def test_zero_coefficients_give_flat_curve(self, smooth_fit):
    zero = replace(smooth_fit, smooth_draws={"x": np.zeros_like(smooth_fit.smooth_draws["x"])})
    curve = posterior.effect_curve(zero, "x")
    np.testing.assert_array_equal(curve.mean, 0.0)
    np.testing.assert_array_equal(curve.upper - curve.lower, 0.0)

  def test_constant_draws_are_significant(self):
    s = posterior.summarize(np.ones(10))
    assert (s.mean, s.lower, s.upper, s.significant) == (1.0, 1.0, 1.0, True)

  def test_zero_spatial_draws(self):
    dataset, graph, _ = synth.scenario_c_spatial(4, 5, 2)
    result = fit(dataset, graph, ModelSpec("y", spatial="region", mcmc=TINY))
    zero = replace(result, spatial_draws=np.zeros_like(result.spatial_draws))
    table = posterior.spatial_table(zero)
    assert all(row.mean == 0.0 and not row.significant for row in table)
