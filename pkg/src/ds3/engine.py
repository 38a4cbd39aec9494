"""Cross-fitted estimation.

:func:`cross_fit` produces held-out nuisance predictions for every row;
:func:`estimate_from_predictions` solves the pooled estimating equation for
one estimator kind and attaches covariance, intervals and overlap
diagnostics.  :func:`run_estimation` chains the two.  Splitting them lets the
simulation harness fit nuisances once per dataset and evaluate all
estimator kinds on the same predictions.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import FoldAssignment, ObservedDataset, assign_folds, labeled_fraction
from .errors import ConfigError, DataError, InsufficientDataError, SeparationWarning
from .inference import CovarianceEstimate, empirical_covariance, wald_intervals
from .nuisance import (
    fit_projection_ols,
    fit_propensity_constant,
    fit_propensity_offset_logistic,
    predict_projection,
    predict_propensity,
)
from .targets import (
    EstimatorKind,
    NuisancePredictions,
    TargetKind,
    augment_with_predictions,
    influence_contributions,
    sigma_hat,
    solve_target,
)

__all__ = [
    "EstimationConfig",
    "EstimateReport",
    "CrossFit",
    "cross_fit",
    "estimate_from_predictions",
    "run_estimation",
    "run_ppi",
]

PROJECTION_MODELS = ("ols", "zero")
PROPENSITY_MODELS = ("constant", "offset_logistic", "known")


@dataclass(frozen=True)
class EstimationConfig:
    """Settings for one cross-fitted estimation.

    ``propensity_floor=None`` means ``1 / (2 m)``.  ``projection_model="zero"``
    forces the projection to 0 everywhere (a deliberately misspecified model
    used to probe double robustness).
    """

    target: str = "mean"
    estimator: str = "ds3"
    projection_model: str = "ols"
    propensity_model: str = "offset_logistic"
    j_folds: int = 5
    seed: int = 0
    propensity_floor: float | None = None
    alpha: float = 0.05
    irls_tol: float = 1e-8
    irls_max_iter: int = 100
    include_intercept: bool = True
    ridge_eps: float = 1e-10
    literal_hotelling: bool = False

    def __post_init__(self):
        try:
            TargetKind(self.target)
            EstimatorKind(self.estimator)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.projection_model not in PROJECTION_MODELS:
            raise ConfigError(f"unknown projection model {self.projection_model!r}")
        if self.propensity_model not in PROPENSITY_MODELS:
            raise ConfigError(f"unknown propensity model {self.propensity_model!r}")
        if self.j_folds < 2:
            raise ConfigError("j_folds must be at least 2")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must be in (0, 1)")
        if self.propensity_floor is not None and not 0 < self.propensity_floor < 1:
            raise ConfigError("propensity_floor must be in (0, 1)")

    def floor_for(self, m: int) -> float:
        return self.propensity_floor if self.propensity_floor is not None else 1.0 / (2 * m)


@dataclass(frozen=True, eq=False)
class CrossFit:
    predictions: NuisancePredictions
    folds: FoldAssignment
    clipped_count: int
    fold_converged: tuple[bool, ...]
    fold_ridge_used: tuple[bool, ...]


@dataclass(frozen=True, eq=False)
class EstimateReport:
    target: str
    estimator: str
    theta_hat: np.ndarray
    v_hat: CovarianceEstimate
    intervals: np.ndarray
    alpha: float
    m: int
    n_labeled: int
    labeled_fraction: float
    overlap_index: float
    effective_sample_size: float
    clipped_count: int
    fold_converged: tuple[bool, ...] = field(default=())
    fold_ridge_used: tuple[bool, ...] = field(default=())

    @property
    def q(self) -> int:
        return self.theta_hat.shape[0]

    def to_dict(self) -> dict:
        """JSON-ready dictionary; ``v_hat`` is flattened row-major."""
        return {
            "target": self.target,
            "estimator": self.estimator,
            "q": self.q,
            "theta_hat": self.theta_hat.tolist(),
            "intervals": self.intervals.tolist(),
            "alpha": self.alpha,
            "v_hat": self.v_hat.v_hat.ravel().tolist(),
            "v_hat_m_used": self.v_hat.m_used,
            "diagnostics": {
                "m": self.m,
                "n_labeled": self.n_labeled,
                "labeled_fraction": self.labeled_fraction,
                "overlap_index": self.overlap_index,
                "effective_sample_size": self.effective_sample_size,
                "clipped_count": self.clipped_count,
                "fold_converged": list(self.fold_converged),
                "fold_ridge_used": list(self.fold_ridge_used),
            },
        }


def _fit_fold(dataset: ObservedDataset, train: np.ndarray, test: np.ndarray,
              config: EstimationConfig, j: int, floor: float):
    xtr, rtr = dataset.x[train], dataset.r[train]
    lab = rtr == 1
    ridge = False
    if config.projection_model == "zero":
        mu = np.zeros((test.shape[0], dataset.k))
    else:
        try:
            proj = fit_projection_ols(xtr[lab], dataset.y[train][lab], config.ridge_eps)
        except InsufficientDataError as exc:
            raise InsufficientDataError(f"fold {j}: {exc}") from None
        mu = predict_projection(proj, dataset.x[test])
        ridge = proj.ridge_used

    converged = True
    if config.propensity_model == "known":
        pi = None
    elif config.propensity_model == "constant":
        prop = fit_propensity_constant(rtr)
        pi = predict_propensity(prop, dataset.x[test], floor)
    else:
        frac = rtr.mean()
        if frac <= 0 or frac >= 1:
            raise InsufficientDataError(f"fold {j}: training complement needs labeled and unlabeled rows")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SeparationWarning)
            prop = fit_propensity_offset_logistic(
                xtr, rtr, offset=float(np.log(frac)),
                include_intercept=config.include_intercept,
                tol=config.irls_tol, max_iter=config.irls_max_iter,
            )
        converged = prop.converged
        pi = predict_propensity(prop, dataset.x[test], floor)
    return mu, pi, converged, ridge


def cross_fit(dataset: ObservedDataset, config: EstimationConfig, known_pi=None,
              folds: FoldAssignment | None = None) -> CrossFit:
    """Held-out projection and propensity predictions for every row.

    Each fold's nuisances are fit on the other folds: the projection on the
    labeled rows, the propensity on all rows.  Propensities (including known
    ones) are floored at ``config.floor_for(m)``.
    """
    m = dataset.m
    floor = config.floor_for(m)
    if config.propensity_model == "known":
        if known_pi is None:
            raise ConfigError("propensity_model='known' needs known_pi")
        known_pi = np.asarray(known_pi, dtype=float).ravel()
        if known_pi.shape[0] != m:
            raise ConfigError(f"known_pi has {known_pi.shape[0]} entries, dataset has {m} rows")
        if not (np.all(known_pi > 0) and np.all(known_pi <= 1)):
            raise ConfigError("known_pi entries must lie in (0, 1]")

    if folds is None:
        need = 0 if config.projection_model == "zero" else dataset.p + 2
        folds = assign_folds(dataset, config.j_folds, config.seed, min_labeled_train=need)

    mu_hat = np.empty((m, dataset.k))
    pi_hat = np.empty(m)
    converged, ridge = [], []
    for j in range(folds.j_folds):
        test = folds.test_rows(j)
        mu, pi, conv, rid = _fit_fold(dataset, folds.train_rows(j), test, config, j, floor)
        mu_hat[test] = mu
        if pi is not None:
            pi_hat[test] = pi
        converged.append(conv)
        ridge.append(rid)

    if config.propensity_model == "known":
        pi_hat = np.clip(known_pi, floor, 1.0)
        clipped = int(np.sum(known_pi < floor))
    else:
        clipped = int(np.sum(pi_hat <= floor))
    if not (np.all(np.isfinite(mu_hat)) and np.all(np.isfinite(pi_hat))):
        raise DataError("nuisance predictions are not finite")
    return CrossFit(NuisancePredictions(mu_hat, pi_hat), folds, clipped,
                    tuple(converged), tuple(ridge))


def estimate_from_predictions(dataset: ObservedDataset, fit: CrossFit, target, estimator,
                              alpha: float = 0.05, sigma=None) -> EstimateReport:
    target, estimator = TargetKind(target), EstimatorKind(estimator)
    preds = fit.predictions
    if target is TargetKind.OLS_COEF and sigma is None:
        sigma = sigma_hat(dataset)
    theta = solve_target(dataset, preds, target, estimator, sigma)
    phi = influence_contributions(dataset, preds, target, estimator, theta, sigma)
    cov = empirical_covariance(phi)
    a_hat = 1.0 / np.mean(1.0 / preds.pi_hat)
    return EstimateReport(
        target=target.value,
        estimator=estimator.value,
        theta_hat=theta,
        v_hat=cov,
        intervals=wald_intervals(theta, cov, alpha),
        alpha=alpha,
        m=dataset.m,
        n_labeled=dataset.n_labeled,
        labeled_fraction=labeled_fraction(dataset),
        overlap_index=float(a_hat),
        effective_sample_size=float(dataset.m * a_hat),
        clipped_count=fit.clipped_count,
        fold_converged=fit.fold_converged,
        fold_ridge_used=fit.fold_ridge_used,
    )


def run_estimation(dataset: ObservedDataset, config: EstimationConfig, known_pi=None,
                   folds: FoldAssignment | None = None) -> EstimateReport:
    """Cross-fit nuisances, solve the pooled estimating equation, report.

    Deterministic in ``(dataset, config, known_pi)``.  ``folds`` overrides the
    seeded stratified assignment.
    """
    fit = cross_fit(dataset, config, known_pi=known_pi, folds=folds)
    return estimate_from_predictions(dataset, fit, config.target, config.estimator, config.alpha)


def run_ppi(dataset: ObservedDataset, f_values, config: EstimationConfig, known_pi=None) -> EstimateReport:
    """:func:`run_estimation` on covariates augmented with prediction columns."""
    return run_estimation(augment_with_predictions(dataset, f_values), config, known_pi=known_pi)
