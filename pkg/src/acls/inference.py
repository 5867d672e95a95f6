"""Plug-in asymptotic inference for capped least squares fits, plus fit metrics."""

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import erfc

from .errors import DegenerateDesignError, InsufficientInliersError, SingularSystemError
from .loss import residuals
from .numerics import inverse_spd, solve_least_squares


@dataclass(frozen=True)
class InferenceReport:
    beta: np.ndarray
    se: np.ndarray
    p_values: np.ndarray
    sigma2_hat: float
    n_effective: int
    sigma_tau_hat: np.ndarray

    def to_dict(self):
        return {
            "beta": self.beta.tolist(),
            "se": self.se.tolist(),
            "p_values": self.p_values.tolist(),
            "sigma2_hat": float(self.sigma2_hat),
            "n_effective": int(self.n_effective),
            "sigma_tau_hat": self.sigma_tau_hat.tolist(),
        }


def two_sided_normal_p(z):
    """2 (1 - Phi(|z|)) computed as erfc(|z| / sqrt 2)."""
    return erfc(np.abs(np.asarray(z, dtype=float)) / math.sqrt(2.0))


def robust_inference(data, fit, cfg):
    """Standard errors and p-values from the inlier-restricted plug-in estimates.

    With ``n_e`` residuals inside the cap::

        sigma2_hat = sum_{inliers} r_i^2 / n_e
        Sigma_tau  = sum_{inliers} x_i x_i' / n_e
        Cov(beta)  = sigma2_hat / n_e * Sigma_tau^{-1}
    """
    beta = np.asarray(fit.beta, dtype=float)
    r = residuals(data, beta)
    inl = np.abs(r) <= cfg.tau
    n_e = int(inl.sum())
    if n_e <= data.p:
        raise InsufficientInliersError(f"only {n_e} inliers for {data.p} coefficients")
    Xi = data.design[inl]
    sigma2 = float(np.sum(r[inl] ** 2) / n_e)
    sigma_tau = Xi.T @ Xi / n_e
    try:
        inv = inverse_spd(sigma_tau)
    except SingularSystemError as exc:
        raise DegenerateDesignError(f"inlier second-moment matrix is singular: {exc}") from exc
    cov = sigma2 / n_e * inv
    se = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(beta == 0, 0.0, beta / se)
    return InferenceReport(beta, se, two_sided_normal_p(z), sigma2, n_e, sigma_tau)


def mse(beta_hat, beta_star):
    diff = np.asarray(beta_hat, dtype=float) - np.asarray(beta_star, dtype=float)
    return float(diff @ diff)


def mape(data, beta_hat):
    """Mean absolute residual."""
    return float(np.mean(np.abs(residuals(data, beta_hat))))


def residual_variance_ols(data):
    beta = solve_least_squares(data.design, data.y)
    r = data.y - data.design @ beta
    return float(np.mean(r * r))
