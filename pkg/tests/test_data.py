import io
import os
import tempfile

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ds3.data import ObservedDataset, assign_folds, labeled_fraction, load_csv, write_csv
from ds3.errors import ConfigError, DataError, DegenerateDataError, InsufficientDataError, SchemaError

from conftest import random_dataset


def _write(tmp_path, text, name="d.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_load_four_rows(tmp_path):
    path = _write(tmp_path, "x1,x2,r,y1\n0.1,0.2,1,3.0\n1,2,0,\n-1,0.5,1,-2\n3,4,0,\n")
    d = load_csv(path)
    assert (d.m, d.p, d.k, d.n_labeled) == (4, 2, 1, 2)
    assert np.isnan(d.y[1, 0]) and d.y[2, 0] == -2.0


def test_labeled_row_with_empty_outcome(tmp_path):
    path = _write(tmp_path, "x1,r,y1\n0.1,1,\n0.2,0,\n")
    with pytest.raises(DataError):
        load_csv(path)


@pytest.mark.parametrize("header", ["x1,x3,r,y1", "x1,r", "r,y1", "x1,y1,r", "a,r,y1"])
def test_bad_headers(tmp_path, header):
    width = len(header.split(","))
    path = _write(tmp_path, header + "\n" + ",".join(["1"] * width) + "\n")
    with pytest.raises(SchemaError):
        load_csv(path)


def test_bad_indicator_and_cells(tmp_path):
    with pytest.raises(DataError):
        load_csv(_write(tmp_path, "x1,r,y1\n0.1,2,1\n0.2,0,\n"))
    with pytest.raises(DataError):
        load_csv(_write(tmp_path, "x1,r,y1\nabc,1,1\n0.2,0,\n"))
    with pytest.raises(SchemaError):
        load_csv(_write(tmp_path, "x1,r,y1\n0.1,1\n"))


def test_no_labels_is_degenerate(tmp_path):
    with pytest.raises(DegenerateDataError):
        load_csv(_write(tmp_path, "x1,r,y1\n1,0,\n2,0,\n"))


def test_unlabeled_outcomes_are_masked():
    d = ObservedDataset(np.ones((3, 1)), [1, 0, 1], [1.0, 99.0, 2.0])
    assert np.isnan(d.y[1, 0])
    with pytest.raises(ValueError):
        d.x[0, 0] = 5.0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(2, 30), p=st.integers(1, 4), k=st.integers(1, 3))
def test_csv_round_trip(seed, m, p, k):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(m, p)) * 10.0 ** rng.integers(-5, 5, size=(m, p))
    r = rng.integers(0, 2, size=m)
    r[0] = 1
    d = ObservedDataset(x, r, rng.normal(size=(m, k)))
    buf = io.StringIO()
    write_csv(d, buf)
    with tempfile.NamedTemporaryFile("w", suffix=".csv", delete=False) as fh:
        fh.write(buf.getvalue())
    try:
        assert load_csv(fh.name).equals(d)
    finally:
        os.unlink(fh.name)


def test_labeled_fraction():
    d = ObservedDataset(np.arange(4.0), [1, 0, 0, 1], [1.0, 0, 0, 2.0])
    assert labeled_fraction(d) == 0.5
    assert labeled_fraction(ObservedDataset(np.arange(3.0), [1, 1, 1], [1.0, 2, 3])) == 1.0


def test_folds_balanced_counts():
    d = ObservedDataset(np.arange(10.0), [1] * 5 + [0] * 5, np.arange(10.0))
    folds = assign_folds(d, 5, seed=3)
    for j in range(5):
        test = folds.test_rows(j)
        assert d.r[test].sum() == 1 and (d.r[test] == 0).sum() == 1


def test_folds_even_split_all_labeled():
    d = ObservedDataset(np.arange(6.0), [1] * 6, np.arange(6.0))
    folds = assign_folds(d, 2, seed=0)
    assert sorted(len(folds.test_rows(j)) for j in range(2)) == [3, 3]


def test_folds_partition_and_determinism(rng):
    d = random_dataset(rng, m=57)
    a = assign_folds(d, 5, seed=11)
    b = assign_folds(d, 5, seed=11)
    assert np.array_equal(a.fold_of, b.fold_of)
    rows = np.concatenate([a.test_rows(j) for j in range(5)])
    assert np.array_equal(np.sort(rows), np.arange(d.m))
    for j in range(5):
        assert set(a.train_rows(j)).isdisjoint(a.test_rows(j))
        labeled = d.r[a.test_rows(j)].sum()
        assert abs(labeled - d.n_labeled / 5) < 1


def test_fold_errors():
    d = ObservedDataset(np.arange(6.0), [1, 1, 0, 0, 0, 0], np.arange(6.0))
    with pytest.raises(ConfigError):
        assign_folds(d, 1, seed=0)
    with pytest.raises(ConfigError):
        assign_folds(d, 3, seed=0)
    with pytest.raises(InsufficientDataError):
        assign_folds(d, 2, seed=0, min_labeled_train=3)
