"""Observed semi-supervised datasets, CSV ingestion and cross-fitting folds.

An observed dataset holds ``m = n + N`` rows of covariates ``x``, a label
indicator ``r`` and outcomes ``y``.  Outcomes on unlabeled rows are stored as
NaN and never read by any estimator.

CSV layout (header is matched exactly)::

    x1,...,xp,r,y1,...,yk

Outcome cells of unlabeled rows are left empty.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigError,
    DataError,
    DegenerateDataError,
    InsufficientDataError,
    SchemaError,
)

__all__ = [
    "ObservedDataset",
    "FoldAssignment",
    "load_csv",
    "write_csv",
    "assign_folds",
    "labeled_fraction",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class ObservedDataset:
    """Covariates, label indicator and partially observed outcomes.

    Parameters
    ----------
    x : array_like, shape (m, p)
        Covariates, fully observed.
    r : array_like, shape (m,)
        Label indicator, 1 where the outcome is observed.
    y : array_like, shape (m, k) or (m,)
        Outcomes.  Rows with ``r == 0`` are ignored and stored as NaN.
    """

    x: np.ndarray
    r: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        r = np.asarray(self.r)
        y = np.asarray(self.y, dtype=float)
        if y.ndim == 1:
            y = y[:, None]
        if x.ndim != 2 or y.ndim != 2 or r.ndim != 1:
            raise DataError("x and y must be 2-d, r must be 1-d")
        m = x.shape[0]
        if r.shape[0] != m or y.shape[0] != m:
            raise DataError(f"row counts disagree: x={m}, r={r.shape[0]}, y={y.shape[0]}")
        if m < 2:
            raise DataError("need at least two observations")
        if x.shape[1] < 1 or y.shape[1] < 1:
            raise DataError("need at least one covariate and one outcome column")
        if not np.all((r == 0) | (r == 1)):
            raise DataError("label indicator must contain only 0 and 1")
        r = r.astype(np.int8)
        if r.sum() == 0:
            raise DegenerateDataError("no labeled observations")
        if not np.all(np.isfinite(x)):
            raise DataError("covariates must be finite")
        labeled = r == 1
        if not np.all(np.isfinite(y[labeled])):
            raise DataError("labeled outcomes must be finite")
        y = y.copy()
        y[~labeled] = np.nan
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "r", _frozen(r))
        object.__setattr__(self, "y", _frozen(y))

    @property
    def m(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def k(self) -> int:
        return self.y.shape[1]

    @property
    def n_labeled(self) -> int:
        return int(self.r.sum())

    @property
    def labeled(self) -> np.ndarray:
        """Boolean mask of labeled rows."""
        return self.r == 1

    def take(self, rows) -> "ObservedDataset":
        """Subset (or reorder) rows."""
        rows = np.asarray(rows)
        return ObservedDataset(self.x[rows], self.r[rows], self.y[rows])

    def equals(self, other: "ObservedDataset") -> bool:
        return (
            self.x.shape == other.x.shape
            and self.y.shape == other.y.shape
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.r, other.r)
            and np.array_equal(self.y, other.y, equal_nan=True)
        )


@dataclass(frozen=True, eq=False)
class FoldAssignment:
    """Fold index per row for J-fold cross-fitting."""

    fold_of: np.ndarray
    j_folds: int

    def __post_init__(self):
        object.__setattr__(self, "fold_of", _frozen(np.asarray(self.fold_of, dtype=np.int64)))

    def test_rows(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == j)

    def train_rows(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != j)


def _parse_header(header: list[str]) -> tuple[int, int]:
    header = [h.strip() for h in header]
    if "r" not in header:
        raise SchemaError("header has no 'r' column")
    i = header.index("r")
    xs, ys = header[:i], header[i + 1:]
    p, k = len(xs), len(ys)
    if p < 1 or k < 1:
        raise SchemaError("header needs at least one x and one y column")
    if xs != [f"x{j}" for j in range(1, p + 1)] or ys != [f"y{j}" for j in range(1, k + 1)]:
        raise SchemaError(f"header must read x1,...,x{p},r,y1,...,y{k}; got {','.join(header)}")
    return p, k


def _float(cell: str, where: str) -> float:
    try:
        return float(cell)
    except ValueError:
        raise DataError(f"cannot parse {cell!r} as a number ({where})") from None


def load_csv(path: str | os.PathLike) -> ObservedDataset:
    """Read an observed dataset from CSV.

    Raises
    ------
    SchemaError
        Header does not follow ``x1,...,xp,r,y1,...,yk``.
    DataError
        Malformed cells, non-finite covariates, or a labeled row with a
        missing or non-finite outcome.
    DegenerateDataError
        No labeled rows.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError("empty file")
    p, k = _parse_header(rows[0])
    body = [row for row in rows[1:] if row and any(c.strip() for c in row)]
    width = p + 1 + k
    x = np.empty((len(body), p))
    r = np.empty(len(body), dtype=np.int8)
    y = np.full((len(body), k), np.nan)
    for i, row in enumerate(body, start=2):
        if len(row) != width:
            raise SchemaError(f"line {i}: expected {width} fields, got {len(row)}")
        cells = [c.strip() for c in row]
        if cells[p] not in ("0", "1"):
            raise DataError(f"line {i}: r must be 0 or 1, got {cells[p]!r}")
        ri = int(cells[p])
        r[i - 2] = ri
        x[i - 2] = [_float(c, f"line {i}") for c in cells[:p]]
        for j, c in enumerate(cells[p + 1:]):
            if c == "":
                if ri == 1:
                    raise DataError(f"line {i}: labeled row has empty y{j + 1}")
                continue
            v = _float(c, f"line {i}")
            if ri == 1 and not np.isfinite(v):
                raise DataError(f"line {i}: labeled row has non-finite y{j + 1}")
            y[i - 2, j] = v
    return ObservedDataset(x, r, y)


def _fmt(v: float) -> str:
    return repr(float(v))


def write_csv(dataset: ObservedDataset, path: str | os.PathLike | io.TextIOBase) -> None:
    """Write ``dataset`` with full float precision; unlabeled outcomes are empty."""
    header = (
        [f"x{j}" for j in range(1, dataset.p + 1)]
        + ["r"]
        + [f"y{j}" for j in range(1, dataset.k + 1)]
    )
    lines = [",".join(header)]
    for xi, ri, yi in zip(dataset.x, dataset.r, dataset.y):
        ys = [_fmt(v) for v in yi] if ri == 1 else [""] * dataset.k
        lines.append(",".join([_fmt(v) for v in xi] + [str(int(ri))] + ys))
    text = "\n".join(lines) + "\n"
    if isinstance(path, io.TextIOBase):
        path.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def labeled_fraction(dataset: ObservedDataset) -> float:
    return dataset.n_labeled / dataset.m


def assign_folds(dataset: ObservedDataset, j_folds: int, seed: int,
                 min_labeled_train: int | None = None) -> FoldAssignment:
    """Stratified random partition of the rows into ``j_folds`` folds.

    Labeled and unlabeled rows are shuffled separately and dealt round-robin,
    so per-fold labeled counts differ by at most one, and likewise for
    unlabeled counts.  Unlabeled rows continue the deal where the labeled
    rows stopped, which also balances total fold sizes.

    ``min_labeled_train`` is the number of labeled rows every training
    complement must keep; it defaults to ``p + 2`` (enough for a least
    squares fit with intercept).  Pass 0 to skip the check.
    """
    j_folds = int(j_folds)
    n_lab = dataset.n_labeled
    n_unl = dataset.m - n_lab
    if j_folds < 2:
        raise ConfigError(f"need at least 2 folds, got {j_folds}")
    if j_folds > n_lab:
        raise ConfigError(f"{j_folds} folds but only {n_lab} labeled rows")
    if n_unl > 0 and j_folds > n_unl:
        raise ConfigError(f"{j_folds} folds but only {n_unl} unlabeled rows")

    rng = np.random.default_rng(seed)
    lab = rng.permutation(np.flatnonzero(dataset.r == 1))
    unl = rng.permutation(np.flatnonzero(dataset.r == 0))
    fold_of = np.empty(dataset.m, dtype=np.int64)
    fold_of[lab] = np.arange(n_lab) % j_folds
    fold_of[unl] = (n_lab + np.arange(n_unl)) % j_folds

    need = dataset.p + 2 if min_labeled_train is None else min_labeled_train
    worst = n_lab - -(-n_lab // j_folds)
    if worst < need:
        raise InsufficientDataError(
            f"a training complement keeps only {worst} labeled rows; need {need}"
        )
    return FoldAssignment(fold_of, j_folds)
