import numpy as np
import pytest

from ds3.data import ObservedDataset


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_dataset(rng, m=40, p=3, k=2, frac=0.4):
    x = rng.normal(size=(m, p))
    r = (rng.random(m) < frac).astype(int)
    r[:2] = [1, 0]
    y = x @ rng.normal(size=(p, k)) + rng.normal(size=(m, k))
    return ObservedDataset(x, r, y)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
