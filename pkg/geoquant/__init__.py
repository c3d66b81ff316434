"""
geoquant - Bayesian geoadditive quantile regression.

Gibbs sampling for conditional quantiles with linear, P-spline and
intrinsic-GMRF spatial effects, plus the descriptive statistics used
alongside it.
"""

from geoquant.engine import FitResult, fit
from geoquant.models import (
  Dataset,
  GeoquantError,
  GraphError,
  McmcConfig,
  ModelSpec,
  ParseError,
  SamplerError,
  SmoothTerm,
  ValidationError,
)

__all__ = [
  "Dataset",
  "FitResult",
  "GeoquantError",
  "GraphError",
  "McmcConfig",
  "ModelSpec",
  "ParseError",
  "SamplerError",
  "SmoothTerm",
  "ValidationError",
  "fit",
]
__version__ = "0.1.0"
