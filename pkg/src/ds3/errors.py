"""Exception hierarchy.

Everything raised on purpose by the package derives from :class:`DS3Error`.
The two top-level branches map onto the command-line exit codes: problems
with the data are :class:`DataError` (exit 2), problems with how the run was
configured are :class:`ConfigError` (exit 3).
"""


class DS3Error(Exception):
    """Base class for all package errors."""


class DataError(DS3Error, ValueError):
    """Input data violate a documented invariant."""


class SchemaError(DataError):
    """A CSV file does not follow the expected header layout."""


class DegenerateDataError(DataError):
    """Data are well-formed but carry no usable information (e.g. no labels)."""


class InsufficientDataError(DataError):
    """Too few observations to fit a model or run a test."""


class SingularDesignError(DataError):
    """The covariate second-moment matrix cannot be inverted."""


class SingularCovarianceError(DataError):
    """An influence-function covariance matrix cannot be inverted."""


class ShapeError(DataError):
    """Array dimensions do not agree."""


class DomainError(DS3Error, ValueError):
    """Argument outside the domain of a special function."""


class ConfigError(DS3Error, ValueError):
    """Invalid estimation, fold or simulation configuration."""


class SeparationWarning(RuntimeWarning):
    """Logistic fit diverged, most likely due to perfect separation."""
