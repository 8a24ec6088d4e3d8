from pathlib import Path

import numpy as np
import pytest

from decouplenet.graph import WeightedDigraph, laplacian

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

_ACCEPTANCE_LINES = []


def record_acceptance(line):
    _ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def path_laplacian(n, w=1.0):
    """Directed path 1 -> 2 -> ... -> n with equal weights: one Jordan block of size n-1."""
    wmat = np.zeros((n, n))
    for i in range(1, n):
        wmat[i, i - 1] = w
    return laplacian(WeightedDigraph(wmat))


def equal_indegree_dag_laplacian(rng, n, w=1.0):
    """Lower-triangular topology whose non-root vertices all have in-degree ``w``.

    Eigenvalue ``w`` has algebraic multiplicity ``n - 1``; defective in general.
    """
    wmat = np.zeros((n, n))
    for i in range(1, n):
        p = rng.dirichlet(np.ones(i))
        wmat[i, :i] = w * p
    return laplacian(WeightedDigraph(wmat))


def random_digraph(rng, n, p=0.5, low=0.1, high=1.0):
    mask = rng.random((n, n)) < p
    w = np.where(mask, rng.uniform(low, high, (n, n)), 0.0)
    return WeightedDigraph(w)


def random_unitary(rng, n):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def scenarios():
    return SCENARIOS
