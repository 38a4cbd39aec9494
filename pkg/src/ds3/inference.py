"""Influence-function covariance, Hotelling T^2 regions and Wald intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, special

from .errors import DataError, DomainError, InsufficientDataError, SingularCovarianceError

__all__ = [
    "CovarianceEstimate",
    "TestResult",
    "empirical_covariance",
    "hotelling_test",
    "hotelling_threshold",
    "f_cdf",
    "f_quantile",
    "normal_cdf",
    "normal_quantile",
    "wald_intervals",
]


@dataclass(frozen=True, eq=False)
class CovarianceEstimate:
    v_hat: np.ndarray
    m_used: int

    @property
    def q(self) -> int:
        return self.v_hat.shape[0]


@dataclass(frozen=True)
class TestResult:
    statistic: float
    threshold: float
    reject: bool
    dof: tuple[int, int]
    alpha: float


def empirical_covariance(contribs) -> CovarianceEstimate:
    """Uncentered second moment ``(1/m) sum_i phi_i phi_i^T`` of contributions."""
    phi = np.asarray(contribs, dtype=float)
    if phi.ndim == 1:
        phi = phi[:, None]
    m = phi.shape[0]
    if m < 2:
        raise InsufficientDataError("need at least two contributions")
    if not np.all(np.isfinite(phi)):
        raise DataError("influence contributions must be finite")
    v = phi.T @ phi / m
    return CovarianceEstimate(0.5 * (v + v.T), m)


def hotelling_threshold(q: int, m: int, alpha: float, scaled: bool = True) -> float:
    """Critical value for ``m (theta - theta0)^T V^-1 (theta - theta0)``.

    With ``scaled`` the F quantile is multiplied by ``q (m - 1) / (m - q)``,
    the factor relating Hotelling's T^2 to the F distribution.  Without it the
    bare ``F(q, m - q)`` quantile is returned, which is only a valid critical
    value for ``q = 1``.
    """
    f = f_quantile(q, m - q, 1.0 - alpha)
    if scaled:
        return f * q * (m - 1) / (m - q)
    return f


def hotelling_test(theta_hat, theta0, cov: CovarianceEstimate, alpha: float = 0.05,
                   literal_formula: bool = False, scaled_threshold: bool = True) -> TestResult:
    """One-sample Hotelling test of ``theta = theta0``.

    The default statistic is ``m (theta_hat - theta0)^T V^-1 (theta_hat - theta0)``
    compared with the Hotelling critical value (see :func:`hotelling_threshold`).
    ``literal_formula`` drops the ``m`` factor from the statistic and
    ``scaled_threshold=False`` compares against the bare F quantile; both are
    kept for auditing alternative conventions.
    """
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must be in (0, 1), got {alpha}")
    d = np.atleast_1d(np.asarray(theta_hat, dtype=float) - np.asarray(theta0, dtype=float))
    q, m = d.shape[0], cov.m_used
    if m <= q:
        raise InsufficientDataError(f"{m} contributions cannot test {q} parameters")
    v = cov.v_hat
    ev = np.linalg.eigvalsh(v)
    if ev[0] <= 1e-12 * np.trace(v):
        raise SingularCovarianceError("influence covariance is singular")
    quad = float(d @ linalg.cho_solve(linalg.cho_factor(v), d))
    stat = quad if literal_formula else m * quad
    thr = hotelling_threshold(q, m, alpha, scaled=scaled_threshold)
    return TestResult(statistic=stat, threshold=thr, reject=bool(stat >= thr),
                      dof=(q, m - q), alpha=alpha)


def f_cdf(x: float, d1: float, d2: float) -> float:
    if x <= 0:
        return 0.0
    return float(special.betainc(d1 / 2, d2 / 2, d1 * x / (d1 * x + d2)))


def _f_sf(x: float, d1: float, d2: float) -> float:
    # computed from the complementary argument to keep upper-tail precision
    return float(special.betainc(d2 / 2, d1 / 2, d2 / (d1 * x + d2)))


def _f_logpdf(x: float, d1: float, d2: float) -> float:
    a, b = d1 / 2, d2 / 2
    return (a * math.log(d1 / d2) + (a - 1) * math.log(x)
            - (a + b) * math.log1p(d1 * x / d2) - special.betaln(a, b))


def f_quantile(d1: int, d2: int, prob: float, tol: float = 1e-10) -> float:
    """Quantile of the F(d1, d2) distribution.

    Inverts the regularized incomplete beta by Newton's method on ``log x``
    inside a maintained bracket, falling back to bisection whenever a Newton
    step leaves the bracket.  Upper-tail probabilities are matched through
    the survival function so quantiles near 1 keep their precision.
    """
    if not 0 < prob < 1:
        raise DomainError(f"probability must be in (0, 1), got {prob}")
    if d1 < 1 or d2 < 1:
        raise DomainError("degrees of freedom must be >= 1")
    upper = prob > 0.5

    def resid(t):
        x = math.exp(t)
        return (1.0 - prob) - _f_sf(x, d1, d2) if upper else f_cdf(x, d1, d2) - prob

    lo, hi = -1.0, 1.0
    while resid(lo) > 0:
        lo *= 2
    while resid(hi) < 0:
        hi *= 2
    t = 0.0 if lo < 0 < hi else 0.5 * (lo + hi)
    for _ in range(200):
        g = resid(t)
        if g == 0:
            return math.exp(t)
        if g < 0:
            lo = t
        else:
            hi = t
        # d/dt F(e^t) = f(e^t) e^t
        dens = math.exp(_f_logpdf(math.exp(t), d1, d2) + t)
        t_new = t - g / dens if dens > 0 else 0.5 * (lo + hi)
        if not lo <= t_new <= hi:
            t_new = 0.5 * (lo + hi)
        x_old, x_new = math.exp(t), math.exp(t_new)
        t = t_new
        if abs(x_new - x_old) <= tol * max(1.0, x_new) or hi - lo < 1e-15:
            break
    return math.exp(t)


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


# Acklam's rational approximation to the inverse normal CDF.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def _acklam(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2 * math.log(p))
        return (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
               ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1)
    if p > 1 - _P_LOW:
        return -_acklam(1 - p)
    q = p - 0.5
    r = q * q
    return (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
           (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1)


def normal_quantile(prob: float) -> float:
    """Inverse standard normal CDF (rational approximation plus a Halley step)."""
    if not 0 < prob < 1:
        raise DomainError(f"probability must be in (0, 1), got {prob}")
    if prob > 0.5:
        return -normal_quantile(1.0 - prob)
    x = _acklam(prob)
    e = normal_cdf(x) - prob
    u = e * math.sqrt(2 * math.pi) * math.exp(x * x / 2)
    return x - u / (1 + x * u / 2)


def wald_intervals(theta_hat, cov: CovarianceEstimate, alpha: float = 0.05) -> np.ndarray:
    """Per-coordinate intervals ``theta_j +/- z sqrt(v_jj / m)``; shape (q, 2)."""
    theta = np.atleast_1d(np.asarray(theta_hat, dtype=float))
    diag = np.diag(cov.v_hat)
    if np.any(diag < 0):
        raise DataError("covariance diagonal must be nonnegative")
    half = normal_quantile(1 - alpha / 2) * np.sqrt(diag / cov.m_used)
    return np.column_stack([theta - half, theta + half])
