"""Estimators and influence functions for the two built-in targets.

Targets
    ``mean``      the k-dimensional outcome mean, ``q = k``.
    ``ols_coef``  least squares coefficients of a scalar outcome on the
                  covariates without intercept, ``q = p``.

Estimator kinds
    ``naive``     labeled rows only, ignoring the labeling mechanism.
    ``or_only``   outcome regression: averages the projection predictions.
    ``ipw_only``  inverse probability weighting of labeled outcomes.
    ``ds3``       augmented IPW: projection plus weighted labeled residuals.

Every non-naive kind builds a per-row pseudo-outcome ``psi`` (the quantity
inside the average) and then solves the pooled estimating equation in
closed form: ``theta = mean(psi)`` for the mean and
``theta = Sigma^-1 mean(x psi)`` for the coefficients, where ``Sigma`` is the
covariate second moment over all rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import linalg

from .data import ObservedDataset
from .errors import ConfigError, DataError, DegenerateDataError, ShapeError, SingularDesignError

__all__ = [
    "TargetKind",
    "EstimatorKind",
    "NuisancePredictions",
    "SigmaHat",
    "sigma_hat",
    "pseudo_outcome",
    "solve_target",
    "influence_contributions",
    "augment_with_predictions",
    "target_dim",
]


class TargetKind(str, Enum):
    MEAN = "mean"
    OLS_COEF = "ols_coef"


class EstimatorKind(str, Enum):
    NAIVE = "naive"
    OR_ONLY = "or_only"
    IPW_ONLY = "ipw_only"
    DS3 = "ds3"


@dataclass(frozen=True, eq=False)
class NuisancePredictions:
    """Held-out projection and propensity predictions, one row per observation."""

    mu_hat: np.ndarray
    pi_hat: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu_hat, dtype=float)
        if mu.ndim == 1:
            mu = mu[:, None]
        pi = np.asarray(self.pi_hat, dtype=float).ravel()
        if mu.shape[0] != pi.shape[0]:
            raise ShapeError("mu_hat and pi_hat row counts differ")
        if not np.all(np.isfinite(mu)):
            raise DataError("projection predictions must be finite")
        if not (np.all(pi > 0) and np.all(pi <= 1)):
            raise DataError("propensity predictions must lie in (0, 1]")
        object.__setattr__(self, "mu_hat", mu)
        object.__setattr__(self, "pi_hat", pi)


@dataclass(frozen=True, eq=False)
class SigmaHat:
    matrix: np.ndarray
    inverse: np.ndarray


def _second_moment_inverse(x: np.ndarray) -> SigmaHat:
    mat = x.T @ x / x.shape[0]
    mat = 0.5 * (mat + mat.T)
    ev = np.linalg.eigvalsh(mat)
    if ev[-1] <= 0 or ev[0] <= 1e-12 * ev[-1]:
        raise SingularDesignError("covariate second-moment matrix is singular")
    factor = linalg.cho_factor(mat)
    inv = linalg.cho_solve(factor, np.eye(mat.shape[0]))
    return SigmaHat(mat, 0.5 * (inv + inv.T))


def sigma_hat(dataset: ObservedDataset) -> SigmaHat:
    """Mean of ``x x^T`` over all rows, labeled and unlabeled, with its inverse."""
    if dataset.m < dataset.p:
        raise SingularDesignError(f"{dataset.m} rows cannot identify {dataset.p} covariates")
    return _second_moment_inverse(dataset.x)


def target_dim(dataset: ObservedDataset, target) -> int:
    target = TargetKind(target)
    if target is TargetKind.MEAN:
        return dataset.k
    if dataset.k != 1:
        raise ConfigError("ols_coef target needs a scalar outcome (k = 1)")
    return dataset.p


def _check(dataset: ObservedDataset, preds: NuisancePredictions, estimator: EstimatorKind):
    if preds.pi_hat.shape[0] != dataset.m or preds.mu_hat.shape[0] != dataset.m:
        raise ShapeError("predictions do not match dataset rows")
    if preds.mu_hat.shape[1] != dataset.k:
        raise ShapeError(f"mu_hat has {preds.mu_hat.shape[1]} columns, dataset has k={dataset.k}")
    if estimator is EstimatorKind.NAIVE and dataset.n_labeled == 0:
        raise DegenerateDataError("naive estimator needs labeled rows")


def pseudo_outcome(dataset: ObservedDataset, preds: NuisancePredictions, estimator) -> np.ndarray:
    """Per-row pseudo-outcome (m x k) averaged by the non-naive estimators."""
    estimator = EstimatorKind(estimator)
    lab = dataset.labeled[:, None]
    y0 = np.where(lab, dataset.y, 0.0)
    w = (dataset.r / preds.pi_hat)[:, None]
    if estimator is EstimatorKind.OR_ONLY:
        return preds.mu_hat.copy()
    if estimator is EstimatorKind.IPW_ONLY:
        return w * y0
    if estimator is EstimatorKind.DS3:
        resid = np.where(lab, dataset.y - preds.mu_hat, 0.0)
        return preds.mu_hat + w * resid
    raise ValueError("naive estimator has no pseudo-outcome")


def _naive_ols(dataset: ObservedDataset) -> tuple[np.ndarray, SigmaHat]:
    lab = dataset.labeled
    xl = dataset.x[lab]
    sig = _second_moment_inverse(xl)
    theta = sig.inverse @ (xl.T @ dataset.y[lab, 0]) / xl.shape[0]
    return theta, sig


def solve_target(dataset: ObservedDataset, preds: NuisancePredictions, target,
                 estimator, sigma: SigmaHat | None = None) -> np.ndarray:
    """Closed-form solution of the pooled estimating equation."""
    target, estimator = TargetKind(target), EstimatorKind(estimator)
    _check(dataset, preds, estimator)
    target_dim(dataset, target)
    if target is TargetKind.MEAN:
        if estimator is EstimatorKind.NAIVE:
            return dataset.y[dataset.labeled].mean(axis=0)
        return pseudo_outcome(dataset, preds, estimator).mean(axis=0)

    if estimator is EstimatorKind.NAIVE:
        return _naive_ols(dataset)[0]
    if sigma is None:
        sigma = sigma_hat(dataset)
    psi = pseudo_outcome(dataset, preds, estimator)[:, 0]
    return sigma.inverse @ (dataset.x.T @ psi / dataset.m)


def influence_contributions(dataset: ObservedDataset, preds: NuisancePredictions, target,
                            estimator, theta, sigma: SigmaHat | None = None) -> np.ndarray:
    """Estimated influence function of each observation at ``theta``.

    Returns an ``(m, q)`` matrix, except for the naive kind which only uses
    labeled rows and returns ``(n_labeled, q)``.  For the naive coefficient
    estimator the premultiplying matrix is the labeled-rows second moment, so
    that its covariance is the usual sandwich of labeled-only least squares.
    """
    target, estimator = TargetKind(target), EstimatorKind(estimator)
    _check(dataset, preds, estimator)
    q = target_dim(dataset, target)
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.shape[0] != q:
        raise ShapeError(f"theta has length {theta.shape[0]}, target needs {q}")
    lab = dataset.labeled

    if target is TargetKind.MEAN:
        if estimator is EstimatorKind.NAIVE:
            return dataset.y[lab] - theta
        return pseudo_outcome(dataset, preds, estimator) - theta

    if estimator is EstimatorKind.NAIVE:
        xl = dataset.x[lab]
        sig = _second_moment_inverse(xl)
        resid = dataset.y[lab, 0] - xl @ theta
        return (xl * resid[:, None]) @ sig.inverse
    if sigma is None:
        raise ShapeError("ols_coef contributions need the covariate second moment")
    psi = pseudo_outcome(dataset, preds, estimator)[:, 0]
    resid = psi - dataset.x @ theta
    return (dataset.x * resid[:, None]) @ sigma.inverse


def augment_with_predictions(dataset: ObservedDataset, f_values) -> ObservedDataset:
    """Append externally supplied prediction columns to the covariates."""
    f = np.asarray(f_values, dtype=float)
    if f.ndim == 1:
        f = f[:, None]
    if f.shape[0] != dataset.m:
        raise ShapeError(f"predictions have {f.shape[0]} rows, dataset has {dataset.m}")
    if not np.all(np.isfinite(f)):
        raise DataError("predictions must be finite on every row")
    if f.shape[1] == 0:
        return dataset
    return ObservedDataset(np.hstack([dataset.x, f]), dataset.r, dataset.y)
