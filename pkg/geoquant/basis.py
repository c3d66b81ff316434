"""
P-spline building blocks.

Equally spaced cubic B-spline bases and difference penalties for the
nonlinear effects of the engine.
"""

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BSpline

from geoquant.models import ValidationError


@dataclass(frozen=True)
class SplineBasis:
  """B-spline basis on an equally spaced knot grid over [x_min, x_max]."""

  degree: int
  n_basis: int
  knots: np.ndarray
  x_min: float
  x_max: float

  @property
  def spacing(self) -> float:
    return (self.x_max - self.x_min) / (self.n_basis - self.degree)


@dataclass(frozen=True)
class PenaltyMatrix:
  """K = D'D for the order-th difference operator D."""

  matrix: np.ndarray
  order: int

  @property
  def rank(self) -> int:
    return self.matrix.shape[0] - self.order


def knot_sequence(x_min: float, x_max: float, m: int = 22, degree: int = 3) -> SplineBasis:
  """Equally spaced knots with `degree` extra knots replicated beyond each boundary."""
  x_min, x_max = float(x_min), float(x_max)
  if not x_min < x_max:
    raise ValidationError("domain", "x_min must be smaller than x_max")
  if degree < 0:
    raise ValidationError("degree", "Degree cannot be negative")
  if m <= degree:
    raise ValidationError("n_basis", "Number of basis functions must exceed the degree")

  intervals = m - degree
  h = (x_max - x_min) / intervals
  interior = np.linspace(x_min, x_max, intervals + 1)
  left = x_min - h * np.arange(degree, 0, -1)
  right = x_max + h * np.arange(1, degree + 1)
  knots = np.concatenate([left, interior, right])
  knots.setflags(write=False)
  return SplineBasis(degree, m, knots, x_min, x_max)


def design_matrix(x: np.ndarray, basis: SplineBasis) -> np.ndarray:
  """n x m matrix of B-spline values; the last interval is closed at x_max."""
  x = np.asarray(x, dtype=float)
  outside = np.flatnonzero((x < basis.x_min) | (x > basis.x_max) | ~np.isfinite(x))
  if outside.size:
    i = int(outside[0])
    raise ValidationError(
      "x", f"Observation {i} ({x[i]!r}) lies outside [{basis.x_min}, {basis.x_max}]"
    )
  return BSpline.design_matrix(x, basis.knots, basis.degree).toarray()


def difference_penalty(m: int, order: int = 2) -> PenaltyMatrix:
  """Penalty D'D with D the (m - order) x m matrix of order-th forward differences."""
  if order < 1:
    raise ValidationError("penalty_order", "Penalty order must be at least 1")
  if m <= order:
    raise ValidationError("n_basis", "Number of basis functions must exceed the penalty order")

  d = np.diff(np.eye(m), n=order, axis=0)
  k = d.T @ d
  k.setflags(write=False)
  return PenaltyMatrix(k, order)
