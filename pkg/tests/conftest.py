import importlib.util

import numpy as np
import pytest

from dqlap.data import Dataset

BACKENDS = ["python"]
if importlib.util.find_spec("dqlap._kernels") is not None:
    BACKENDS.append("cython")


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_dataset(features, labels, days=None, day_count=0):
    features = np.asarray(features, dtype=float)
    if days is None:
        days = np.ones(len(features), dtype=int)
    return Dataset(features, labels, days, day_count=day_count)


def separable(n=400, seed=0, ratio=1.0):
    """Two well separated 2-D blobs, already inside [0, 1]."""
    rng = np.random.default_rng(seed)
    n_fault = int(n / (1 + ratio))
    labels = np.array([0] * n_fault + [1] * (n - n_fault))
    centers = np.where(labels[:, None] == 1, [0.75, 0.75], [0.25, 0.25])
    x = np.clip(centers + 0.05 * rng.standard_normal((n, 2)), 0, 1)
    order = rng.permutation(n)
    return make_dataset(x[order], labels[order])


# acceptance lines collected by test_acceptance.py, echoed in the terminal summary
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda l: int(l.split()[1])):
            terminalreporter.write_line(line)
