"""
Synthetic scenarios with known conditional quantiles.

A: linear effect, B: sine-shaped smooth effect, C: smooth spatial field
on a rook-adjacency lattice. Every generator is a pure function of its
parameters and seed.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from geoquant.graph import RegionGraph
from geoquant.models import Dataset, ValidationError, validate_count, validate_quantile

NOISE_SD_A = 1.0
NOISE_SD_B = 0.3
NOISE_SD_C = 0.5


@dataclass(frozen=True)
class Scenario:
  """Label, size, seed and ground truth of a generated dataset."""

  label: str
  n: int
  seed: int
  truth: dict = field(default_factory=dict)

  def to_dict(self) -> dict:
    return {"label": self.label, "n": self.n, "seed": self.seed, "truth": self.truth}


def normal_offset(tau: float, sd: float = 1.0) -> float:
  """tau-quantile of N(0, sd^2)."""
  return float(sd * norm.ppf(validate_quantile(tau, "tau")))


def linear_truth(x, tau: float) -> np.ndarray:
  """True tau-quantile line of scenario A."""
  return 1.0 + 2.0 * np.asarray(x, dtype=float) + normal_offset(tau, NOISE_SD_A)


def smooth_truth(x, tau: float) -> np.ndarray:
  """True tau-quantile curve of scenario B."""
  return np.sin(2.0 * np.pi * np.asarray(x, dtype=float)) + normal_offset(tau, NOISE_SD_B)


def scenario_a_linear(n: int, seed: int) -> tuple[Dataset, Scenario]:
  """y = 1 + 2x + e with x ~ U(-1, 1) and e ~ N(0, 1)."""
  n = validate_count(n, "n", minimum=50)
  rng = np.random.default_rng(seed)
  x = rng.uniform(-1.0, 1.0, n)
  y = 1.0 + 2.0 * x + NOISE_SD_A * rng.standard_normal(n)
  truth = {"intercept": 1.0, "slope": 2.0, "noise_sd": NOISE_SD_A}
  return Dataset(("y", "x"), {"y": y, "x": x}), Scenario("A", n, seed, truth)


def scenario_b_smooth(n: int, seed: int) -> tuple[Dataset, Scenario]:
  """y = sin(2 pi x) + e with x ~ U(0, 1) and e ~ N(0, 0.3^2)."""
  n = validate_count(n, "n", minimum=200)
  rng = np.random.default_rng(seed)
  x = rng.uniform(0.0, 1.0, n)
  y = np.sin(2.0 * np.pi * x) + NOISE_SD_B * rng.standard_normal(n)
  truth = {"function": "sin(2*pi*x)", "noise_sd": NOISE_SD_B}
  return Dataset(("y", "x"), {"y": y, "x": x}), Scenario("B", n, seed, truth)


def lattice_graph(grid_side: int) -> RegionGraph:
  """grid_side x grid_side rook lattice with labels 1..grid_side^2 in row-major order."""
  g = validate_count(grid_side, "grid_side", minimum=1)
  adjacency = []
  for row in range(g):
    for col in range(g):
      nbrs = []
      if row > 0:
        nbrs.append((row - 1) * g + col)
      if col > 0:
        nbrs.append(row * g + col - 1)
      if col < g - 1:
        nbrs.append(row * g + col + 1)
      if row < g - 1:
        nbrs.append((row + 1) * g + col)
      adjacency.append(tuple(nbrs))
  return RegionGraph(tuple(str(r + 1) for r in range(g * g)), tuple(adjacency))


def lattice_field(grid_side: int) -> np.ndarray:
  """Smooth field over the lattice, centered to mean zero."""
  coords = np.arange(grid_side) / (grid_side - 1)
  u, v = np.meshgrid(coords, coords, indexing="ij")
  raw = (np.sin(np.pi * u) * np.cos(np.pi * v) + 0.5 * (u - v)).ravel()
  return raw - raw.mean()


def scenario_c_spatial(grid_side: int, per_region: int, seed: int) -> tuple[Dataset, RegionGraph, Scenario]:
  """y = s(region) + e on a rook lattice, e ~ N(0, 0.5^2)."""
  grid_side = validate_count(grid_side, "grid_side", minimum=4)
  per_region = validate_count(per_region, "per_region", minimum=5)
  if seed < 0:
    raise ValidationError("seed", "Seed cannot be negative")

  graph = lattice_graph(grid_side)
  field_values = lattice_field(grid_side)
  rng = np.random.default_rng(seed)

  region_pos = np.repeat(np.arange(graph.size), per_region)
  y = field_values[region_pos] + NOISE_SD_C * rng.standard_normal(region_pos.size)
  dataset = Dataset(
    ("y", "region"),
    {"y": y, "region": (region_pos + 1).astype(float)},
    region_column="region",
  )
  truth = {
    "grid_side": grid_side,
    "per_region": per_region,
    "noise_sd": NOISE_SD_C,
    "field": {label: float(v) for label, v in zip(graph.labels, field_values)},
  }
  return dataset, graph, Scenario("C", int(region_pos.size), seed, truth)
