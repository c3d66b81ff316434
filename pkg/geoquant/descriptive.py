"""
Descriptive statistics: rank-sum tests, rank correlations, LOWESS and
per-band summaries of a covariate.
"""

from dataclasses import dataclass
from itertools import combinations
from math import ceil
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from geoquant.ingest import Band, sample_quantile
from geoquant.models import Dataset, ValidationError

EXACT = "exact"
NORMAL = "normal-approximation"
EXACT_LIMIT = 10


@dataclass(frozen=True)
class TestResult:
  """Statistic and two-sided p-value of a hypothesis test."""

  __test__ = False

  statistic: float
  p_value: float
  method: str

  def __post_init__(self):
    if not 0.0 <= self.p_value <= 1.0:
      raise ValidationError("p_value", "p-value must lie in [0, 1]")


@dataclass(frozen=True)
class BandStat:
  band: Band
  stratum: Optional[float]
  count: int
  mean: float
  se: float


def _as_sample(values, field_name: str) -> np.ndarray:
  values = np.asarray(values, dtype=float).ravel()
  if values.size == 0:
    raise ValidationError(field_name, "Sample is empty")
  if not np.all(np.isfinite(values)):
    raise ValidationError(field_name, "Sample contains non-finite values")
  return values


def exact_rank_sum_pvalue(ranks: np.ndarray, n_a: int, statistic: float) -> float:
  """Two-sided p-value by enumerating every assignment of n_a ranks to the first sample."""
  sums = np.array([ranks[list(c)].sum() for c in combinations(range(ranks.size), n_a)])
  tol = 1e-9 * max(1.0, abs(statistic))
  lower = np.mean(sums <= statistic + tol)
  upper = np.mean(sums >= statistic - tol)
  return float(min(1.0, 2.0 * min(lower, upper)))


def wilcoxon_rank_sum(a, b, method: str = "auto") -> TestResult:
  """Rank-sum W of sample `a` under midranks with a two-sided p-value.

  `method` is "auto" (exact for tie-free samples with n_a + n_b <= 10),
  "exact" (full enumeration, midranks kept) or "normal".
  """
  a = _as_sample(a, "a")
  b = _as_sample(b, "b")
  if method not in ("auto", "exact", "normal"):
    raise ValidationError("method", "Method must be auto, exact or normal")

  pooled = np.concatenate([a, b])
  ranks = stats.rankdata(pooled)
  statistic = float(ranks[: a.size].sum())
  has_ties = np.unique(pooled).size < pooled.size

  if method == "exact" or (method == "auto" and pooled.size <= EXACT_LIMIT and not has_ties):
    return TestResult(statistic, exact_rank_sum_pvalue(ranks, a.size, statistic), EXACT)

  if np.all(pooled == pooled[0]):
    return TestResult(statistic, 1.0, NORMAL)

  result = stats.mannwhitneyu(
    a, b, alternative="two-sided", use_continuity=True, method="asymptotic"
  )
  return TestResult(statistic, float(min(1.0, result.pvalue)), NORMAL)


def spearman(x, y) -> tuple[float, float]:
  """Spearman rho (Pearson correlation of midranks) with the t-approximation p-value."""
  x = _as_sample(x, "x")
  y = _as_sample(y, "y")
  if x.size != y.size:
    raise ValidationError("y", "x and y must have the same length")
  if x.size < 3:
    raise ValidationError("x", "At least three observations are needed")
  if np.all(x == x[0]):
    raise ValidationError("x", "Constant vector has no rank correlation")
  if np.all(y == y[0]):
    raise ValidationError("y", "Constant vector has no rank correlation")

  rho, p = stats.spearmanr(x, y)
  return float(rho), float(np.clip(p, 0.0, 1.0))


def correlation_matrix(dataset: Dataset, cols: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
  """Symmetric Spearman rho matrix with its companion p-value matrix."""
  cols = list(cols)
  k = len(cols)
  rho = np.eye(k)
  p = np.zeros((k, k))
  for i in range(k):
    for j in range(i + 1, k):
      try:
        r, pv = spearman(dataset.column(cols[i]), dataset.column(cols[j]))
      except ValidationError as e:
        raise ValidationError(f"{cols[i]}/{cols[j]}", e.message)
      rho[i, j] = rho[j, i] = r
      p[i, j] = p[j, i] = pv
  return rho, p


def lowess(x, y, span: float = 2.0 / 3.0, robustness_iters: int = 3) -> np.ndarray:
  """Robust locally weighted linear regression evaluated at every x."""
  x = _as_sample(x, "x")
  y = _as_sample(y, "y")
  if x.size != y.size:
    raise ValidationError("y", "x and y must have the same length")
  n = x.size
  if n < 2:
    raise ValidationError("x", "At least two points are needed")
  if not 0.0 < span <= 1.0:
    raise ValidationError("span", "Span must lie in (0, 1]")
  if robustness_iters < 0:
    raise ValidationError("robustness_iters", "Iterations cannot be negative")

  r = min(n, max(2, int(ceil(span * n))))
  distances = np.abs(x[:, None] - x[None, :])
  h = np.sort(distances, axis=1)[:, r - 1]
  h = np.maximum(h, np.finfo(float).tiny)
  local = np.clip(distances / h[:, None], 0.0, 1.0)
  local = (1.0 - local ** 3) ** 3

  design = np.column_stack([np.ones(n), x])
  robust = np.ones(n)
  fitted = np.zeros(n)
  for step in range(robustness_iters + 1):
    for i in range(n):
      sw = np.sqrt(local[i] * robust)
      coef, *_ = np.linalg.lstsq(design * sw[:, None], y * sw, rcond=None)
      fitted[i] = coef[0] + coef[1] * x[i]

    if step == robustness_iters:
      break
    residuals = y - fitted
    scale = float(np.median(np.abs(residuals)))
    if scale <= np.finfo(float).eps * max(1.0, float(np.max(np.abs(y)))):
      break
    robust = np.clip(residuals / (6.0 * scale), -1.0, 1.0)
    robust = (1.0 - robust ** 2) ** 2

  return fitted


def median_iqr(values) -> tuple[float, float, float]:
  """Median with the 25% and 75% sample quantiles."""
  values = _as_sample(values, "values")
  q25, med, q75 = sample_quantile(values, [0.25, 0.5, 0.75])
  return float(med), float(q25), float(q75)


def band_summary(values, bands: Sequence[Band], strata=None) -> list[BandStat]:
  """Mean and standard error of `values` within each band, optionally per stratum."""
  values = _as_sample(values, "values")
  bands = np.asarray([Band(b) for b in bands], dtype=object)
  if bands.size != values.size:
    raise ValidationError("bands", "One band label per value is required")

  if strata is None:
    groups = [(None, np.ones(values.size, dtype=bool))]
  else:
    strata = np.asarray(strata, dtype=float)
    if strata.size != values.size:
      raise ValidationError("strata", "One stratum per value is required")
    groups = [(float(s), strata == s) for s in np.unique(strata)]

  table = []
  for band in Band:
    for stratum, mask in groups:
      selected = values[mask & (bands == band)]
      if selected.size == 0:
        continue
      se = float(np.std(selected, ddof=1) / np.sqrt(selected.size)) if selected.size > 1 else float("nan")
      table.append(BandStat(band, stratum, int(selected.size), float(selected.mean()), se))
  return table


def band_correlations(response, covariate, bands: Sequence[Band]) -> dict[Band, Optional[tuple[float, float]]]:
  """Spearman rho and p between response and covariate within each band."""
  response = _as_sample(response, "response")
  covariate = _as_sample(covariate, "covariate")
  bands = np.asarray([Band(b) for b in bands], dtype=object)

  result: dict[Band, Optional[tuple[float, float]]] = {}
  for band in Band:
    mask = bands == band
    try:
      result[band] = spearman(response[mask], covariate[mask])
    except ValidationError:
      result[band] = None
  return result
