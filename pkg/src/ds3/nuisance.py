"""Projection and propensity nuisance models.

The projection model is a least squares fit of the outcome on covariates
(with intercept), trained on labeled rows.  The propensity model is either a
constant labeling rate or a logistic regression of ``r`` on covariates with
a fixed offset, fit by iteratively reweighted least squares.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DataError, DegenerateDataError, InsufficientDataError, SeparationWarning, ShapeError

__all__ = [
    "ProjectionFit",
    "PropensityFit",
    "expit",
    "logit",
    "fit_projection_ols",
    "fit_propensity_constant",
    "fit_propensity_offset_logistic",
    "predict_projection",
    "predict_propensity",
    "bernoulli_loglik",
]

# Gram matrices with eigenvalue ratio below this are treated as singular.
_RCOND = 1e-12
_SEPARATION_NORM = 1e6
_PERFECT_FIT = 1e-8


def expit(x):
    """Logistic function ``exp(x) / (1 + exp(x))``, overflow-safe."""
    return special.expit(x)


def logit(p):
    return special.logit(p)


@dataclass(frozen=True)
class ProjectionFit:
    """Least squares coefficients, intercept in the first row."""

    coef: np.ndarray
    ridge_used: bool = False

    @property
    def p(self) -> int:
        return self.coef.shape[0] - 1

    @property
    def k(self) -> int:
        return self.coef.shape[1]


@dataclass(frozen=True)
class PropensityFit:
    kind: str
    rate: float = 1.0
    offset: float = 0.0
    gamma: np.ndarray | None = None
    intercept: float = 0.0
    converged: bool = True
    iterations: int = 0


def _with_intercept(x: np.ndarray) -> np.ndarray:
    return np.hstack([np.ones((x.shape[0], 1)), x])


def _ridged(gram: np.ndarray, eps: float, skip_first: bool) -> np.ndarray:
    scale = np.mean(np.diag(gram))
    if scale <= 0:
        scale = 1.0
    pad = np.full(gram.shape[0], eps * scale)
    if skip_first:
        pad[0] = 0.0
    return gram + np.diag(pad)


def _is_singular(gram: np.ndarray) -> bool:
    ev = np.linalg.eigvalsh(gram)
    return ev[-1] <= 0 or ev[0] <= _RCOND * ev[-1]


def fit_projection_ols(x_labeled, y_labeled, ridge_eps: float = 1e-10) -> ProjectionFit:
    """Column-wise least squares of ``y`` on ``[1, x]``.

    Falls back to a ridge solve (penalty ``ridge_eps`` times the mean Gram
    diagonal, intercept unpenalized) when the Gram matrix is numerically
    singular.
    """
    x = np.asarray(x_labeled, dtype=float)
    y = np.asarray(y_labeled, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if y.ndim == 1:
        y = y[:, None]
    n, p = x.shape
    if y.shape[0] != n:
        raise ShapeError(f"x has {n} rows, y has {y.shape[0]}")
    if n < p + 2:
        raise InsufficientDataError(f"{n} labeled rows cannot fit {p + 1} coefficients")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DataError("projection inputs must be finite")
    design = _with_intercept(x)
    gram = design.T @ design
    if not _is_singular(gram):
        coef = np.linalg.lstsq(design, y, rcond=None)[0]
        return ProjectionFit(coef, ridge_used=False)
    coef = np.linalg.solve(_ridged(gram, ridge_eps, skip_first=True), design.T @ y)
    return ProjectionFit(coef, ridge_used=True)


def predict_projection(fit: ProjectionFit, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[1] != fit.p:
        raise ShapeError(f"fit has {fit.p} covariates, x has {x.shape[1]}")
    return fit.coef[0] + x @ fit.coef[1:]


def fit_propensity_constant(r_train) -> PropensityFit:
    r = np.asarray(r_train)
    if r.size == 0 or r.sum() == 0:
        raise DegenerateDataError("constant propensity needs at least one labeled row")
    return PropensityFit(kind="constant", rate=float(r.mean()))


def bernoulli_loglik(eta, r) -> float:
    """Bernoulli log-likelihood with linear predictor ``eta``."""
    eta = np.asarray(eta, dtype=float)
    return float(np.sum(r * eta - np.logaddexp(0.0, eta)))


def fit_propensity_offset_logistic(x_train, r_train, offset: float,
                                   include_intercept: bool = False,
                                   tol: float = 1e-8, max_iter: int = 100,
                                   max_halvings: int = 30) -> PropensityFit:
    """Logistic regression of ``r`` on ``x`` with a fixed offset, by IRLS.

    Model: ``P(r = 1 | x) = expit(offset + [b0 +] x @ gamma)``.  Each Newton
    step is halved until the log-likelihood stops decreasing.  The fit is
    flagged unconverged (with a :class:`SeparationWarning`) if the
    coefficient norm passes 1e6 or every fitted probability is within 1e-8
    of its label.
    """
    x = np.asarray(x_train, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    r = np.asarray(r_train, dtype=float)
    if r.shape[0] != x.shape[0]:
        raise ShapeError(f"x has {x.shape[0]} rows, r has {r.shape[0]}")
    if not np.isfinite(offset):
        raise DataError("offset must be finite")
    if r.sum() == 0 or r.sum() == r.size:
        raise DegenerateDataError("logistic propensity needs both labeled and unlabeled rows")
    z = _with_intercept(x) if include_intercept else x
    beta = np.zeros(z.shape[1])
    eta = offset + z @ beta
    ll = bernoulli_loglik(eta, r)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        mu = expit(eta)
        w = mu * (1.0 - mu)
        grad = z.T @ (r - mu)
        hess = (z * w[:, None]).T @ z
        if _is_singular(hess):
            hess = _ridged(hess, 1e-10, skip_first=False)
        step = np.linalg.solve(hess, grad)
        t = 1.0
        for _ in range(max_halvings + 1):
            cand = beta + t * step
            eta_c = offset + z @ cand
            ll_c = bernoulli_loglik(eta_c, r)
            if ll_c >= ll:
                break
            t *= 0.5
        else:
            # no ascent along the Newton direction: already at the optimum
            # up to rounding
            converged = True
            break
        change = np.max(np.abs(cand - beta))
        beta, eta, ll = cand, eta_c, ll_c
        if (np.linalg.norm(beta) > _SEPARATION_NORM
                or np.max(np.abs(r - expit(eta))) < _PERFECT_FIT):
            warnings.warn("offset logistic fit diverged (perfect separation?)", SeparationWarning)
            break
        if change < tol:
            converged = True
            break
    if include_intercept:
        b0, gamma = float(beta[0]), beta[1:]
    else:
        b0, gamma = 0.0, beta
    return PropensityFit(kind="offset_logistic", offset=float(offset), gamma=gamma,
                         intercept=b0, converged=converged, iterations=it)


def predict_propensity(fit: PropensityFit, x, floor: float) -> np.ndarray:
    """Model labeling probabilities, clamped to ``[floor, 1]``."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if fit.kind == "constant":
        prob = np.full(x.shape[0], fit.rate)
    elif fit.kind == "offset_logistic":
        if x.shape[1] != fit.gamma.shape[0]:
            raise ShapeError(f"fit has {fit.gamma.shape[0]} covariates, x has {x.shape[1]}")
        prob = expit(fit.offset + fit.intercept + x @ fit.gamma)
    else:
        raise ValueError(f"unknown propensity kind {fit.kind!r}")
    return np.clip(prob, floor, 1.0)
