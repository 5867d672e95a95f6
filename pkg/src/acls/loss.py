"""Capped least squares loss, its score function and the resistance-parameter rules.

The capped least squares (CLS) loss is quadratic up to the resistance
parameter ``tau`` and flat beyond it::

    l_tau(x) = x**2 / 2     if |x| <= tau
             = tau**2 / 2   otherwise
"""

from dataclasses import dataclass
from enum import Enum
import math

import numpy as np

from .errors import DegenerateScaleError, InvalidArgumentError


class TauRule(str, Enum):
    EXPLICIT = "explicit"
    SQRT_N_OVER_LOGLOG_N = "sqrt-n-over-loglog-n"
    MAD_SCALED = "mad-scaled"


@dataclass(frozen=True)
class LossConfig:
    tau: float
    rule: TauRule = TauRule.EXPLICIT

    def __post_init__(self):
        _check_tau(self.tau)
        object.__setattr__(self, "rule", TauRule(self.rule))

    @classmethod
    def from_rule(cls, n, rule=TauRule.SQRT_N_OVER_LOGLOG_N, sigma_hat=None, c=1.0, tau=None):
        return cls(select_tau(n, rule, sigma_hat=sigma_hat, c=c, tau=tau), TauRule(rule))


@dataclass(frozen=True)
class Dataset:
    """Design matrix ``X`` (n x d), responses ``y`` and the intercept convention.

    With ``add_intercept`` the estimators work on ``[1 | X]``; use
    :attr:`design` to get the matrix they actually see.
    """

    X: np.ndarray
    y: np.ndarray
    add_intercept: bool = False

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or y.ndim != 1:
            raise InvalidArgumentError("X must be 2-d and y 1-d")
        if X.shape[0] != y.shape[0]:
            raise InvalidArgumentError(f"X has {X.shape[0]} rows but y has {y.shape[0]} entries")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise InvalidArgumentError("need n >= 1 and d >= 1")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise InvalidArgumentError("data contain non-finite entries")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if self.add_intercept:
            design = np.column_stack([np.ones(X.shape[0]), X])
        else:
            design = X
        object.__setattr__(self, "_design", design)

    @property
    def design(self):
        return self._design

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        """Number of coefficients (columns of the design, intercept included)."""
        return self._design.shape[1]

    def subset(self, rows):
        return Dataset(self.X[rows], self.y[rows], self.add_intercept)

    def with_response(self, y):
        return Dataset(self.X, y, self.add_intercept)


def _check_tau(tau):
    if not (isinstance(tau, (int, float, np.floating, np.integer)) and math.isfinite(tau) and tau > 0):
        raise InvalidArgumentError(f"tau must be positive and finite, got {tau!r}")


def cls_loss(x, tau):
    """Capped least squares loss, elementwise for array input."""
    _check_tau(tau)
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError("residuals must be finite")
    out = np.where(np.abs(x) <= tau, 0.5 * x * x, 0.5 * tau * tau)
    return out.item() if out.ndim == 0 else out


def cls_score(x, tau):
    """psi_tau(x) = x * 1(|x| <= tau); the boundary counts as inside."""
    _check_tau(tau)
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError("residuals must be finite")
    out = np.where(np.abs(x) <= tau, x, 0.0)
    return out.item() if out.ndim == 0 else out


def _residuals(data, beta):
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (data.p,):
        raise InvalidArgumentError(f"beta has shape {beta.shape}, expected ({data.p},)")
    return data.y - data.design @ beta


def residuals(data, beta):
    return _residuals(data, beta)


def empirical_loss(data, beta, cfg):
    r = _residuals(data, beta)
    if not np.all(np.isfinite(r)):
        raise InvalidArgumentError("non-finite residuals")
    tau = cfg.tau
    return float(np.mean(np.minimum(r * r, tau * tau)) * 0.5)


def empirical_gradient(data, beta, cfg):
    """Gradient of :func:`empirical_loss`, ``-(1/n) sum psi_tau(r_i) x_i``."""
    r = _residuals(data, beta)
    psi = np.where(np.abs(r) <= cfg.tau, r, 0.0)
    return -(data.design.T @ psi) / data.n


def select_tau(n, rule, sigma_hat=None, c=1.0, tau=None):
    """Resistance parameter from one of the supported rules.

    ``sqrt-n-over-loglog-n`` gives ``sqrt(n) / log(log(n))`` (natural logs,
    needs n >= 16); ``mad-scaled`` multiplies that by ``c * sigma_hat``;
    ``explicit`` returns ``tau`` unchanged.
    """
    rule = TauRule(rule)
    if rule is TauRule.EXPLICIT:
        if tau is None:
            raise InvalidArgumentError("explicit rule needs tau")
        _check_tau(tau)
        return float(tau)
    if n < 16:
        raise InvalidArgumentError(f"loglog rule needs n >= 16, got n={n}")
    base = math.sqrt(n) / math.log(math.log(n))
    if rule is TauRule.SQRT_N_OVER_LOGLOG_N:
        return base
    if sigma_hat is None:
        raise InvalidArgumentError("mad-scaled rule needs sigma_hat")
    if sigma_hat < 0 or not math.isfinite(sigma_hat):
        raise InvalidArgumentError(f"sigma_hat must be nonnegative, got {sigma_hat}")
    if sigma_hat == 0:
        raise DegenerateScaleError("sigma_hat is zero; scale-based tau is degenerate")
    if not c > 0:
        raise InvalidArgumentError("c must be positive")
    return c * sigma_hat * base
