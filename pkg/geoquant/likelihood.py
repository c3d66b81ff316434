"""Check loss and the asymmetric Laplace working likelihood."""

import numpy as np

from geoquant.models import ValidationError, validate_quantile


def mixture_constants(tau: float) -> tuple[float, float]:
  """xi = (1 - 2 tau) / (tau (1 - tau)) and kappa^2 = 2 / (tau (1 - tau))."""
  tau = validate_quantile(tau)
  scale = tau * (1.0 - tau)
  return (1.0 - 2.0 * tau) / scale, 2.0 / scale


def check_loss(u, tau: float):
  """rho_tau(u) = u (tau - 1{u < 0})."""
  tau = validate_quantile(tau)
  u = np.asarray(u, dtype=float)
  loss = np.where(u < 0.0, u * (tau - 1.0), u * tau)
  return float(loss) if loss.ndim == 0 else loss


def ald_logdensity(y, eta, sigma: float, tau: float):
  """log[tau (1 - tau) / sigma] - rho_tau(y - eta) / sigma."""
  if not sigma > 0.0:
    raise ValidationError("sigma", "Scale must be positive")
  tau = validate_quantile(tau)
  u = np.asarray(y, dtype=float) - np.asarray(eta, dtype=float)
  return np.log(tau * (1.0 - tau) / sigma) - check_loss(u, tau) / sigma
