import numpy as np
import pytest

from graph_core import build_graph
from graph_factories import k22_rw, k3_rw, path2, random_graph


@pytest.fixture
def p2():
    return path2()


@pytest.fixture
def k3():
    return k3_rw()


@pytest.fixture
def k22():
    return k22_rw()


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def connected_graph():
    return random_graph(7, 20)


@pytest.fixture
def disconnected_graph():
    """Two triangles, no edge between them."""
    edges = [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0), (3, 4, 2.0), (3, 5, 1.0), (4, 5, 0.5)]
    return build_graph(6, edges, [1.0, 2.0, 1.0, 3.0, 1.0, 2.0])
