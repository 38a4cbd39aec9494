"""Doubly robust estimation for semi-supervised data with decaying overlap."""

from .data import ObservedDataset, FoldAssignment, assign_folds, labeled_fraction, load_csv, write_csv
from .engine import EstimateReport, EstimationConfig, cross_fit, estimate_from_predictions, run_estimation, run_ppi
from .errors import (
    ConfigError,
    DataError,
    DegenerateDataError,
    DomainError,
    DS3Error,
    InsufficientDataError,
    SchemaError,
    SeparationWarning,
    ShapeError,
    SingularCovarianceError,
    SingularDesignError,
)
from .inference import f_quantile, hotelling_test, normal_quantile, wald_intervals
from .simgen import ScenarioConfig, generate, replication_seed, true_propensity, true_theta
from .targets import EstimatorKind, TargetKind

__version__ = "0.1.0"
