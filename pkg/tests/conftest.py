import math

import numpy as np
import pytest

from chartgeo.charts import euclidean_atlas, sphere_atlas
from chartgeo.metric import euclidean_metric, pullback_metric, sphere_metric


@pytest.fixture(scope="session")
def sphere():
    return sphere_metric(sphere_atlas())


@pytest.fixture(scope="session")
def pullback():
    return pullback_metric(sphere_atlas())


@pytest.fixture(scope="session")
def euclid2():
    return euclidean_metric(euclidean_atlas(2))


@pytest.fixture(scope="session")
def euclid3():
    return euclidean_metric(euclidean_atlas(3))


def conformal_factor(x):
    """Closed-form sphere metric factor 4 / (1 + |x|^2)^2 in either chart."""
    return 4.0 / (1.0 + float(np.dot(x, x))) ** 2


def conformal_christoffel(x):
    """Closed-form Christoffels of ``lam(x) * I`` with ``lam`` the sphere factor."""
    x = np.asarray(x, dtype=float)
    r2 = x @ x
    lam = 4.0 / (1.0 + r2) ** 2
    dlam = -16.0 * x / (1.0 + r2) ** 3
    d = np.eye(2)
    return 0.5 / lam * (np.einsum("i,kj->kij", dlam, d) + np.einsum("j,ki->kij", dlam, d)
                        - np.einsum("k,ij->kij", dlam, d))


def great_circle_distance(p, q):
    return math.acos(max(-1.0, min(1.0, float(np.dot(p, q)))))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
