import numpy as np
import pytest

from princigraph.energy import DataSet
from princigraph.graph import ElasticGraph

ACCEPTANCE_LINES = []


def random_tree(rng, n, lam=1.0, mu=None):
    """Random labelled tree on ``n`` vertices (each vertex attaches to an earlier one)."""
    pairs = [(int(rng.integers(0, i)), i) for i in range(1, n)]
    return ElasticGraph.from_edges(n, pairs, lam, mu)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def iris():
    from princigraph.datasets import load_iris
    return DataSet(load_iris())


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
