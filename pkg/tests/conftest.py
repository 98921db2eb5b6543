import numpy as np
import pytest

from carclust import (
    CentroidSequence,
    LongitudinalPanel,
    PartitionSequence,
    VarCoefficients,
)
from oracles import random_labels

_CRITERIA: list[str] = []


def record_criterion(name: str, passed: bool | None, detail: str = "") -> None:
    """Log one acceptance line; ``passed=None`` marks a criterion that could not run."""
    status = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
    line = f"[{status}] {name}"
    if detail:
        line += f" -- {detail}"
    _CRITERIA.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)


def random_instance(rng, n, J, T, G, P=1):
    """Random panel, partition, model centroids and coefficients."""
    x = rng.normal(size=(T, n, J))
    labels = random_labels(rng, T, n, G)
    xbar = rng.normal(size=(T - 1, G, J))
    c = rng.normal(size=J)
    lags = rng.normal(scale=0.5, size=(P, J, J))
    return (
        LongitudinalPanel.from_time_major(x),
        PartitionSequence(labels, G),
        CentroidSequence(xbar),
        VarCoefficients(c, lags),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
