"""Tests for geoquant.basis module."""

import numpy as np
import pytest

from geoquant.basis import design_matrix, difference_penalty, knot_sequence
from geoquant.models import ValidationError


class TestKnotSequence:
  def test_equally_spaced_with_outer_knots(self):
    basis = knot_sequence(0.0, 1.0, m=22, degree=3)
    assert basis.knots.size == 22 + 3 + 1
    assert basis.spacing == pytest.approx(1.0 / 19)
    np.testing.assert_allclose(np.diff(basis.knots), basis.spacing)
    assert basis.knots[3] == 0.0
    assert basis.knots[-4] == pytest.approx(1.0)

  def test_empty_domain(self):
    with pytest.raises(ValidationError):
      knot_sequence(1.0, 1.0)


class TestDesignMatrix:
  def test_rows_sum_to_one(self):
    basis = knot_sequence(-2.0, 3.0)
    x = np.linspace(-2.0, 3.0, 57)
    b = design_matrix(x, basis)
    assert b.shape == (57, 22)
    np.testing.assert_allclose(b.sum(axis=1), 1.0)
    assert np.all(b >= 0.0)

  def test_interior_knot_values(self):
    basis = knot_sequence(0.0, 1.0, m=7, degree=3)
    b = design_matrix(np.array([0.5]), basis)
    nonzero = b[0][b[0] > 1e-12]
    np.testing.assert_allclose(nonzero, [1 / 6, 4 / 6, 1 / 6])

  def test_right_boundary_is_covered(self):
    basis = knot_sequence(0.0, 1.0)
    b = design_matrix(np.array([1.0]), basis)
    assert b.sum() == pytest.approx(1.0)

  def test_outside_domain_reports_observation(self):
    basis = knot_sequence(0.0, 1.0)
    with pytest.raises(ValidationError, match="Observation 1"):
      design_matrix(np.array([0.5, 1.5]), basis)


class TestDifferencePenalty:
  def test_second_order(self):
    k = difference_penalty(5, order=2)
    assert k.rank == 3
    np.testing.assert_array_equal(k.matrix[0], [1, -2, 1, 0, 0])
    np.testing.assert_allclose(k.matrix @ np.ones(5), 0.0)
    np.testing.assert_allclose(k.matrix @ np.arange(5.0), 0.0, atol=1e-12)

  def test_symmetric_positive_semidefinite(self):
    k = difference_penalty(22).matrix
    np.testing.assert_array_equal(k, k.T)
    assert np.linalg.eigvalsh(k).min() > -1e-10

  def test_order_must_be_smaller_than_size(self):
    with pytest.raises(ValidationError):
      difference_penalty(2, order=2)


class TestKnotExamples:
  def test_unit_spacing(self):
    basis = knot_sequence(0.0, 19.0, m=22, degree=3)
    np.testing.assert_allclose(basis.knots, np.arange(-3.0, 23.0))

  def test_single_interval(self):
    basis = knot_sequence(0.0, 1.0, m=4, degree=3)
    np.testing.assert_allclose(basis.knots, np.arange(-3.0, 5.0))

  def test_too_few_functions(self):
    with pytest.raises(ValidationError):
      knot_sequence(0.0, 1.0, m=3, degree=3)

  def test_local_support(self):
    basis = knot_sequence(0.0, 1.0)
    b = design_matrix(np.random.default_rng(0).uniform(size=1000), basis)
    assert (np.count_nonzero(b, axis=1) <= 4).all()
    np.testing.assert_allclose(b.sum(axis=1), 1.0, atol=1e-10)

  def test_penalty_is_squared_differences(self):
    k = difference_penalty(22).matrix
    rng = np.random.default_rng(1)
    for _ in range(20):
      gamma = rng.normal(size=22)
      assert gamma @ k @ gamma == pytest.approx(np.sum(np.diff(gamma, n=2) ** 2), rel=1e-10)

  def test_small_penalty(self):
    np.testing.assert_array_equal(difference_penalty(3).matrix, [[1, -2, 1], [-2, 4, -2], [1, -2, 1]])
    assert np.linalg.matrix_rank(difference_penalty(22).matrix) == 20
